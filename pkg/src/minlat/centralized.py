"""Centralized greedy latency minimization.

Nodes are settled one at a time in increasing order of optimal latency,
much like Dijkstra's algorithm: at each round every unsettled node solves
its relay-subset problem over already-settled neighbors, and the node with
the smallest resulting latency is settled.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .contact_model import ContactGraph, DisconnectedGraphError
from .relay import RelayCandidate, best_relay_subset

__all__ = ["SettleStep", "CentralizedResult", "centralized_minlat", "convergence_time_bound"]


class SettleStep(NamedTuple):
    node: int
    latency: float
    relays: frozenset


class CentralizedResult(NamedTuple):
    decisions: np.ndarray
    latencies: np.ndarray
    steps: list[SettleStep]

    @property
    def order(self) -> list[int]:
        return [s.node for s in self.steps]


def centralized_minlat(graph: ContactGraph) -> CentralizedResult:
    n, d = graph.n, graph.destination
    B = np.zeros((n, n))
    L = np.full(n, np.inf)
    L[d] = 0.0
    settled = {d}
    steps: list[SettleStep] = []
    while len(settled) < n:
        best = None
        for i in range(n):
            if i in settled:
                continue
            cands = [
                RelayCandidate(j, lam, L[j])
                for j, lam in graph.neighbors(i).items()
                if j in settled
            ]
            sel = best_relay_subset(cands)
            # ties resolved toward the smaller node id by strict comparison
            if best is None or sel.value < best[1].value:
                best = (i, sel)
        v, sel = best
        if math.isinf(sel.value):
            raise DisconnectedGraphError("some nodes cannot reach the destination")
        L[v] = sel.value
        for j in sel.chosen:
            B[v, j] = 1.0
        settled.add(v)
        steps.append(SettleStep(v, sel.value, sel.chosen))
    return CentralizedResult(B, L, steps)


def convergence_time_bound(graph: ContactGraph, settlement_order: list[int]) -> float:
    """Upper bound on the mean time for decentralized MinLat to converge.

    The ``l``-th settled node must meet each of its relay candidates (the
    destination and earlier-settled neighbors) after its predecessor has
    converged; each such phase takes less than ``count / min rate``.
    """
    d = graph.destination
    order = [v for v in settlement_order if v != d]
    earlier = {d}
    bound = 0.0
    for l, v in enumerate(order, start=1):
        rates = [lam for j, lam in graph.neighbors(v).items() if j in earlier]
        if not rates:
            return math.inf
        bound += max(l - 1, len(rates)) / min(rates)
        earlier.add(v)
    return bound
