"""Comparison forwarding protocols: Epidemic, PRoPHETv2 and simplified MaxProp.

Every protocol is also wrapped as a :class:`Router` so the simulator can
drive them through the same contact -> decision -> transfer cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .contact_model import ContactGraph
from .protocol import ESTIMATED, EXACT, init_states, on_meeting

__all__ = [
    "ProtocolDecision",
    "epidemic_decide",
    "ProphetParams",
    "ProphetState",
    "prophet_age",
    "prophet_encounter",
    "prophet_decide",
    "prophet_update_and_decide",
    "MaxPropState",
    "maxprop_encounter",
    "maxprop_cost",
    "maxprop_decide",
    "Router",
    "MinLatRouter",
    "EpidemicRouter",
    "ProphetRouter",
    "MaxPropRouter",
    "PROTOCOLS",
    "make_router",
]


@dataclass(frozen=True)
class ProtocolDecision:
    messages_to_forward: tuple = ()
    keep_copy: bool = False


# --- Epidemic -------------------------------------------------------------


def epidemic_decide(buffer: Iterable[int], peer_summary: set) -> ProtocolDecision:
    """Offer every buffered message the peer has never held."""
    return ProtocolDecision(tuple(m for m in buffer if m not in peer_summary), keep_copy=True)


# --- PRoPHETv2 ------------------------------------------------------------


@dataclass(frozen=True)
class ProphetParams:
    p_init: float = 0.75
    beta: float = 0.25
    gamma: float = 0.98
    time_step: float = 1.0


@dataclass
class ProphetState:
    node: int
    predictabilities: dict[int, float] = field(default_factory=dict)
    last_aging: float = 0.0
    params: ProphetParams = ProphetParams()

    def p(self, other: int) -> float:
        if other == self.node:
            return 1.0
        return self.predictabilities.get(other, 0.0)


def prophet_age(state: ProphetState, now: float) -> None:
    elapsed = now - state.last_aging
    if elapsed < 0:
        raise ValueError("aging backwards in time")
    if elapsed > 0:
        factor = state.params.gamma ** (elapsed / state.params.time_step)
        for k in state.predictabilities:
            state.predictabilities[k] *= factor
    state.last_aging = now


def prophet_encounter(a: ProphetState, b: ProphetState, now: float) -> None:
    """Aging, direct update and max-transitive update for both nodes."""
    prophet_age(a, now)
    prophet_age(b, now)
    for s, peer in ((a, b.node), (b, a.node)):
        old = s.p(peer)
        s.predictabilities[peer] = old + (1.0 - old) * s.params.p_init
    snap_a, snap_b = dict(a.predictabilities), dict(b.predictabilities)
    for s, via, table in ((a, b.node, snap_b), (b, a.node, snap_a)):
        p_via = s.predictabilities[via]
        for c, p_vc in table.items():
            if c == s.node or c == via:
                continue
            s.predictabilities[c] = max(s.p(c), p_via * p_vc * s.params.beta)


def prophet_decide(
    carrier: ProphetState, peer: ProphetState, buffer: Iterable[int], destinations
) -> ProtocolDecision:
    """Forward messages whose destination the peer is strictly likelier to reach."""
    fwd = tuple(m for m in buffer if peer.p(destinations[m]) > carrier.p(destinations[m]))
    return ProtocolDecision(fwd, keep_copy=False)


def prophet_update_and_decide(
    state_a: ProphetState,
    state_b: ProphetState,
    elapsed: float,
    buffers: tuple[Sequence[int], Sequence[int]],
    destinations,
) -> tuple[ProtocolDecision, ProtocolDecision]:
    """Meeting ``elapsed`` seconds after ``state_a`` last aged; decisions a->b, b->a."""
    now = state_a.last_aging + elapsed
    prophet_encounter(state_a, state_b, now)
    return (
        prophet_decide(state_a, state_b, buffers[0], destinations),
        prophet_decide(state_b, state_a, buffers[1], destinations),
    )


# --- MaxProp (simplified) ---------------------------------------------------


@dataclass
class MaxPropState:
    """Incremental-average meeting likelihoods plus copies learned from peers."""

    node: int
    n: int
    likelihood: np.ndarray = None
    known: dict[int, tuple[float, np.ndarray]] = field(default_factory=dict)

    def __post_init__(self):
        if self.likelihood is None:
            self.likelihood = _uniform_likelihood(self.node, self.n)

    def vector(self, k: int) -> np.ndarray:
        if k == self.node:
            return self.likelihood
        if k in self.known:
            return self.known[k][1]
        return _uniform_likelihood(k, self.n)


def _uniform_likelihood(node: int, n: int) -> np.ndarray:
    f = np.full(n, 1.0 / max(n - 1, 1))
    f[node] = 0.0
    return f


def maxprop_encounter(a: MaxPropState, b: MaxPropState, now: float) -> None:
    for s, peer in ((a, b.node), (b, a.node)):
        s.likelihood[peer] += 1.0
        s.likelihood /= s.likelihood.sum()
    for s, other in ((a, b), (b, a)):
        s.known[other.node] = (now, other.likelihood.copy())
    # exchange second-hand vectors, newest wins
    for s, other in ((a, b), (b, a)):
        for k, (t, vec) in list(other.known.items()):
            if k == s.node:
                continue
            if k not in s.known or s.known[k][0] < t:
                s.known[k] = (t, vec.copy())


def maxprop_cost(state: MaxPropState, target: int) -> float:
    """Minimum over paths of the summed ``1 - likelihood`` link costs."""
    n = state.n
    dist = np.full(n, np.inf)
    dist[state.node] = 0.0
    done = np.zeros(n, dtype=bool)
    for _ in range(n):
        u = int(np.argmin(np.where(done, np.inf, dist)))
        if done[u] or math.isinf(dist[u]):
            break
        if u == target:
            return float(dist[u])
        done[u] = True
        alt = dist[u] + (1.0 - state.vector(u))
        alt[u] = np.inf
        np.minimum(dist, np.where(done, np.inf, alt), out=dist, where=~done)
    return float(dist[target])


def maxprop_decide(
    carrier: MaxPropState,
    peer_summary: set,
    buffer: Iterable[int],
    destinations,
    created,
) -> ProtocolDecision:
    """Offer unseen messages, cheapest destination first, then oldest first."""
    cost_cache: dict[int, float] = {}

    def key(m):
        dst = destinations[m]
        if dst not in cost_cache:
            cost_cache[dst] = maxprop_cost(carrier, dst)
        return (cost_cache[dst], created[m], m)

    offer = sorted((m for m in buffer if m not in peer_summary), key=key)
    return ProtocolDecision(tuple(offer), keep_copy=True)


# --- routers used by the simulator -----------------------------------------


class Router:
    """Per-simulation protocol state for all nodes."""

    name = "router"
    single_copy = True

    def __init__(self, graph: ContactGraph):
        self.graph = graph

    def on_contact(self, a: int, b: int, time: float) -> None:
        pass

    def decide(self, carrier: int, peer: int, buffer: Sequence[int], sim) -> ProtocolDecision:
        raise NotImplementedError


class MinLatRouter(Router):
    name = "minlat"
    single_copy = True
    mode = EXACT

    def __init__(self, graph: ContactGraph):
        super().__init__(graph)
        self.states = init_states(graph, self.mode)

    def on_contact(self, a, b, time):
        on_meeting(self.states[a], self.states[b], time)

    def decide(self, carrier, peer, buffer, sim):
        if peer in self.states[carrier].decision:
            d = self.graph.destination
            return ProtocolDecision(tuple(m for m in buffer if sim.destination_of(m) == d))
        return ProtocolDecision()


class MinLatERouter(MinLatRouter):
    name = "minlat-e"
    mode = ESTIMATED


class EpidemicRouter(Router):
    name = "epidemic"
    single_copy = False

    def decide(self, carrier, peer, buffer, sim):
        return epidemic_decide(buffer, sim.summary(peer))


class ProphetRouter(Router):
    name = "prophetv2"
    single_copy = True

    def __init__(self, graph: ContactGraph, params: ProphetParams = ProphetParams()):
        super().__init__(graph)
        self.states = [ProphetState(i, params=params) for i in range(graph.n)]

    def on_contact(self, a, b, time):
        prophet_encounter(self.states[a], self.states[b], time)

    def decide(self, carrier, peer, buffer, sim):
        return prophet_decide(
            self.states[carrier], self.states[peer], buffer, sim.destination_map(buffer)
        )


class MaxPropRouter(Router):
    name = "maxprop-s"
    single_copy = False

    def __init__(self, graph: ContactGraph):
        super().__init__(graph)
        self.states = [MaxPropState(i, graph.n) for i in range(graph.n)]

    def on_contact(self, a, b, time):
        maxprop_encounter(self.states[a], self.states[b], time)

    def decide(self, carrier, peer, buffer, sim):
        return maxprop_decide(
            self.states[carrier],
            sim.summary(peer),
            buffer,
            sim.destination_map(buffer),
            sim.created_map(buffer),
        )


PROTOCOLS = {
    r.name: r for r in (MinLatRouter, MinLatERouter, EpidemicRouter, ProphetRouter, MaxPropRouter)
}


def make_router(name: str, graph: ContactGraph) -> Router:
    try:
        cls = PROTOCOLS[name]
    except KeyError:
        raise ValueError(f"unknown protocol {name!r}; choose from {sorted(PROTOCOLS)}") from None
    return cls(graph)
