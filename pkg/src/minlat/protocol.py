"""Decentralized MinLat and MinLat-E node state machines.

Each node keeps its own latency estimate, its last-heard estimate for each
neighbor and a binary forwarding row. At every meeting the two nodes swap
their current self-estimates and re-solve their relay subsets. In
``exact`` mode a node learns the true meeting rate of a neighbor at their
first meeting; in ``estimated`` mode it runs the recursive exponential MLE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .centralized import centralized_minlat, convergence_time_bound
from .contact_model import ContactGraph, ContactTrace, poisson_meetings, sample_contacts
from .latency import expected_latencies
from .relay import RelayCandidate, best_relay_subset

__all__ = [
    "EXACT",
    "ESTIMATED",
    "GAP_EPSILON",
    "RateEstimator",
    "update_rate_estimate",
    "batch_rate_estimate",
    "NodeState",
    "init_states",
    "on_meeting",
    "decision_matrix",
    "ProtocolRun",
    "run_protocol",
    "ErrorSample",
    "latency_error_series",
]

EXACT = "exact"
ESTIMATED = "estimated"
GAP_EPSILON = 1e-6


@dataclass(frozen=True)
class RateEstimator:
    """Online MLE of an exponential meeting rate.

    ``count`` meetings have been seen; the estimate exists once there is
    at least one intermeeting gap.
    """

    count: int = 0
    last_meeting: float | None = None
    estimate: float | None = None


def update_rate_estimate(est: RateEstimator, now: float) -> RateEstimator:
    if est.last_meeting is None:
        return RateEstimator(1, now, None)
    if now < est.last_meeting:
        raise ValueError(f"meeting at {now} precedes last meeting at {est.last_meeting}")
    gap = max(now - est.last_meeting, GAP_EPSILON)
    n = est.count  # gaps observed including this one
    if est.estimate is None:
        lam = 1.0 / gap
    else:
        lam = n * est.estimate / (n - 1 + est.estimate * gap)
    return RateEstimator(est.count + 1, now, lam)


def batch_rate_estimate(gaps) -> float:
    gaps = np.asarray(gaps, dtype=float)
    return len(gaps) / gaps.sum()


@dataclass
class NodeState:
    id: int
    destination: int
    mode: str = EXACT
    self_latency: float = math.inf
    neighbor_latencies: dict[int, float] = field(default_factory=dict)
    decision: frozenset = frozenset()
    rates: dict[int, float] = field(default_factory=dict)
    true_rates: dict[int, float] = field(default_factory=dict)
    estimators: dict[int, RateEstimator] = field(default_factory=dict)
    ignored_meetings: int = 0

    def __post_init__(self):
        if self.id == self.destination:
            self.self_latency = 0.0

    @property
    def is_destination(self) -> bool:
        return self.id == self.destination

    def known_latency(self, k: int) -> float:
        if k == self.destination:
            return 0.0
        return self.neighbor_latencies.get(k, math.inf)

    def resolve(self) -> None:
        """Re-solve the relay subset over current neighbor estimates."""
        if self.is_destination:
            return
        cands = [RelayCandidate(k, lam, self.known_latency(k)) for k, lam in self.rates.items()]
        sel = best_relay_subset(cands)
        self.self_latency = sel.value
        self.decision = sel.chosen


def init_states(graph: ContactGraph, mode: str = EXACT) -> list[NodeState]:
    if mode not in (EXACT, ESTIMATED):
        raise ValueError(f"unknown mode {mode!r}")
    return [
        NodeState(i, graph.destination, mode, true_rates=graph.neighbors(i))
        for i in range(graph.n)
    ]


def _learn_rate(state: NodeState, peer: int, time: float) -> None:
    if state.mode == EXACT:
        state.rates[peer] = state.true_rates[peer]
    else:
        est = update_rate_estimate(state.estimators.get(peer, RateEstimator()), time)
        state.estimators[peer] = est
        if est.estimate is not None:
            state.rates[peer] = est.estimate


def on_meeting(a: NodeState, b: NodeState, time: float) -> tuple[NodeState, NodeState]:
    """Process a meeting of ``a`` and ``b`` in place; returns both states.

    Meetings between nodes that are not contact-graph neighbors are
    counted and otherwise ignored.
    """
    if b.id not in a.true_rates:
        a.ignored_meetings += 1
        b.ignored_meetings += 1
        return a, b
    _learn_rate(a, b.id, time)
    _learn_rate(b, a.id, time)
    # swap the pre-meeting self estimates, then both re-solve
    la, lb = a.self_latency, b.self_latency
    a.neighbor_latencies[b.id] = lb
    b.neighbor_latencies[a.id] = la
    a.resolve()
    b.resolve()
    return a, b


def decision_matrix(states: list[NodeState]) -> np.ndarray:
    n = len(states)
    B = np.zeros((n, n))
    for s in states:
        for j in s.decision:
            B[s.id, j] = 1.0
    return B


@dataclass
class ProtocolRun:
    states: list[NodeState]
    convergence_time: float
    target: np.ndarray
    bound: float
    changes: list[tuple[float, int, frozenset]]
    meetings: int


def run_protocol(
    graph: ContactGraph,
    mode: str = EXACT,
    horizon: float | None = None,
    seed: int | None = None,
    *,
    trace: ContactTrace | None = None,
    early_stop: bool = True,
) -> ProtocolRun:
    """Drive MinLat on sampled (or given) meetings until ``horizon``.

    ``convergence_time`` is the time from which the stacked decision
    matrix equals the centralized optimum through the end of the run, or
    ``inf`` when it does not hold at the end. The default horizon is 100x
    the convergence-time bound.

    With exact rates the state where every decision matches and every
    self-estimate equals its optimum is absorbing: the chosen sets are
    the unique optimal ones and later updates can only lower stale copies
    of non-members to values that still exceed the node's own. With
    ``early_stop`` the run ends there; the convergence time is unchanged.
    """
    opt = centralized_minlat(graph)
    bound = convergence_time_bound(graph, opt.order)
    if horizon is None:
        horizon = 100.0 * bound
    if trace is None:
        stream = poisson_meetings(graph, np.random.default_rng(seed))
    else:
        stream = ((e.start, e.a, e.b) for e in trace.events)
    states = init_states(graph, mode)
    target_rows = [frozenset(np.flatnonzero(opt.decisions[i]).tolist()) for i in range(graph.n)]
    wrong = sum(1 for s in states if s.decision != target_rows[s.id])
    since = 0.0 if wrong == 0 else None
    changes: list[tuple[float, int, frozenset]] = []
    meetings = 0
    for t, i, j in stream:
        if t > horizon:
            break
        a, b = states[i], states[j]
        before = (a.decision, b.decision)
        on_meeting(a, b, t)
        meetings += 1
        for s, old in zip((a, b), before):
            if s.decision != old:
                changes.append((t, s.id, s.decision))
                wrong += (s.decision != target_rows[s.id]) - (old != target_rows[s.id])
        if wrong == 0 and since is None:
            since = t
        elif wrong > 0:
            since = None
        if early_stop and wrong == 0 and mode == EXACT and _settled(states, opt.latencies):
            break
    conv = since if since is not None else math.inf
    return ProtocolRun(states, conv, opt.decisions, bound, changes, meetings)


def _settled(states: list[NodeState], optimum: np.ndarray) -> bool:
    return all(abs(s.self_latency - optimum[s.id]) <= 1e-9 * optimum[s.id] for s in states)


@dataclass(frozen=True)
class ErrorSample:
    time: float
    estimated_error: float
    achieved_error: float


def _mean_abs_error(values: np.ndarray, optimum: np.ndarray, mask: np.ndarray) -> float:
    diff = np.abs(values[mask] - optimum[mask])
    return float(diff.mean()) if diff.size else 0.0


def latency_error_series(
    graph: ContactGraph,
    mode: str = ESTIMATED,
    horizon: float = 5e4,
    sample_times=None,
    seed: int | None = None,
    *,
    centralized: bool = False,
    trace: ContactTrace | None = None,
) -> list[ErrorSample]:
    """Network-average absolute errors of estimated and achieved latencies.

    At each sample time: the mean over non-destination nodes of
    ``|estimate_k - L_k(B*)|`` and of ``|L_k(B_t) - L_k(B*)|`` where
    ``L(B_t)`` uses the true rates. With ``centralized=True`` the decision
    matrix at time ``t`` is the centralized solution on the rates known
    so far instead of the decentralized protocol state.
    """
    opt = centralized_minlat(graph)
    L_star = opt.latencies
    mask = np.ones(graph.n, dtype=bool)
    mask[graph.destination] = False
    if sample_times is None:
        sample_times = np.linspace(horizon / 100, horizon, 100)
    sample_times = sorted(float(t) for t in sample_times)
    if trace is None:
        trace = sample_contacts(graph, horizon, np.random.default_rng(seed))
    states = init_states(graph, mode)
    events = iter(trace.events)
    pending = next(events, None)
    out = []
    for t in sample_times:
        while pending is not None and pending.start <= t:
            on_meeting(states[pending.a], states[pending.b], pending.start)
            pending = next(events, None)
        if centralized:
            est_L, B = _centralized_on_known_rates(graph, states)
        else:
            est_L = np.array([s.self_latency for s in states])
            B = decision_matrix(states)
        achieved = expected_latencies(graph, B)
        out.append(
            ErrorSample(
                t, _mean_abs_error(est_L, L_star, mask), _mean_abs_error(achieved, L_star, mask)
            )
        )
    return out


def _centralized_on_known_rates(graph: ContactGraph, states: list[NodeState]):
    """Centralized solve on the pairwise rates learned so far."""
    n, d = graph.n, graph.destination
    L = np.full(n, np.inf)
    L[d] = 0.0
    B = np.zeros((n, n))
    known = [dict(s.rates) for s in states]
    settled = {d}
    while True:
        best = None
        for i in range(n):
            if i in settled:
                continue
            cands = [RelayCandidate(j, lam, L[j]) for j, lam in known[i].items() if j in settled]
            sel = best_relay_subset(cands)
            if math.isfinite(sel.value) and (best is None or sel.value < best[1].value):
                best = (i, sel)
        if best is None:
            break
        v, sel = best
        L[v] = sel.value
        for j in sel.chosen:
            B[v, j] = 1.0
        settled.add(v)
    return L, B
