"""Deterministic discrete-event simulation of DTN message forwarding.

The contact process is fixed up front (sampled from the graph, or a
replayed trace), so every protocol run with the same seed sees the same
meetings and the same workload. Events are processed in ``(time, seq)``
order.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .baselines import PROTOCOLS, make_router
from .contact_model import (
    ContactGraph,
    ContactTrace,
    empirical_rates,
    merge_contacts,
    sample_contacts,
)

__all__ = [
    "Message",
    "Constraints",
    "Workload",
    "Scenario",
    "MetricsReport",
    "SimulationResult",
    "ConfigError",
    "run_simulation",
    "ProtocolSummary",
    "Comparison",
    "compare_protocols",
    "SlotScenario",
    "infocom_slotting",
    "NA",
]

NA = "NA"
PENDING, LIVE, DELIVERED = "pending", "live", "delivered"
DROPPED_TTL, DROPPED_BUF = "drop_ttl", "drop_buf"


class ConfigError(ValueError):
    pass


@dataclass
class Message:
    id: int
    source: int
    destination: int
    created_at: float
    hops: int = 0
    delivered_at: float | None = None
    status: str = PENDING


@dataclass(frozen=True)
class Constraints:
    ttl: float | None = None
    buffer_capacity: int | None = None
    exchange_limit: int | None = None

    def __post_init__(self):
        for name in ("ttl", "buffer_capacity", "exchange_limit"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be positive, got {v}")


@dataclass(frozen=True)
class Workload:
    """``count`` messages every ``spacing`` seconds from ``start``.

    Sources are uniform over non-destination nodes unless ``sources`` is
    given explicitly; ``times`` likewise overrides the regular spacing.
    """

    count: int = 1000
    spacing: float = 5.0
    start: float = 0.0
    sources: tuple | None = None
    times: tuple | None = None
    eligible: tuple | None = None

    def realize(self, n: int, destination: int, rng: np.random.Generator):
        times = self.times if self.times is not None else tuple(
            self.start + k * self.spacing for k in range(self.count)
        )
        if self.sources is not None:
            sources = self.sources
        else:
            pool = self.eligible if self.eligible is not None else range(n)
            pool = np.array([v for v in pool if v != destination])
            sources = tuple(int(x) for x in rng.choice(pool, size=len(times)))
        if len(sources) != len(times):
            raise ConfigError("workload sources and times differ in length")
        for s in sources:
            if not 0 <= s < n or s == destination:
                raise ConfigError(f"invalid message source {s}")
        return list(zip(times, sources))


@dataclass
class Scenario:
    """A contact graph plus either sampled meetings or a replayed trace."""

    graph: ContactGraph
    horizon: float
    workload: Workload = Workload()
    trace: ContactTrace | None = None

    def contacts(self, seed: int) -> ContactTrace:
        if self.trace is not None:
            return self.trace
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
        return sample_contacts(self.graph, self.horizon, rng)

    def messages(self, seed: int):
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        return self.workload.realize(self.graph.n, self.graph.destination, rng)


@dataclass
class MetricsReport:
    protocol: str
    seed: int
    delivery_rate: float
    avg_latency: float
    avg_hop_count: float
    avg_buffer_occupancy: float
    delivered: np.ndarray
    latencies: np.ndarray
    hops: np.ndarray

    def restricted_latency(self, mask: np.ndarray) -> float:
        if not mask.any():
            return math.nan
        return float(self.latencies[mask].mean())


@dataclass
class SimulationResult:
    metrics: MetricsReport
    messages: list[Message]
    log: list[str]

    @property
    def checksum(self) -> str:
        return hashlib.sha256("\n".join(self.log).encode()).hexdigest()


class _Sim:
    """Mutable run state; also the view routers query during decisions."""

    def __init__(self, n: int, messages: list[Message]):
        self.buffers: list[dict[int, int]] = [dict() for _ in range(n)]  # msg -> hops
        self.seen: list[set] = [set() for _ in range(n)]
        self.holders: dict[int, set] = {m.id: set() for m in messages}
        self.messages = messages
        self.destinations = [m.destination for m in messages]
        self.created = [m.created_at for m in messages]
        self.copies = 0

    def destination_of(self, m: int) -> int:
        return self.messages[m].destination

    def destination_map(self, ids=None) -> list[int]:
        """Indexable by message id."""
        return self.destinations

    def created_map(self, ids=None) -> list[float]:
        return self.created

    def summary(self, node: int) -> set:
        return self.seen[node]

    def add(self, node: int, m: int, hops: int) -> None:
        self.buffers[node][m] = hops
        self.seen[node].add(m)
        self.holders[m].add(node)
        self.copies += 1

    def remove(self, node: int, m: int) -> None:
        del self.buffers[node][m]
        self.holders[m].discard(node)
        self.copies -= 1


def _fmt(t: float) -> str:
    return f"{t:.6f}"


def run_simulation(
    scenario: Scenario,
    protocol: str,
    constraints: Constraints = Constraints(),
    seed: int = 0,
    *,
    check_invariants: bool = False,
) -> SimulationResult:
    if protocol not in PROTOCOLS:
        raise ConfigError(f"unknown protocol {protocol!r}")
    if not scenario.horizon > 0:
        raise ConfigError("horizon must be positive")
    graph = scenario.graph
    n, dest = graph.n, graph.destination
    router = make_router(protocol, graph)
    single = router.single_copy
    contacts = scenario.contacts(seed)
    if scenario.trace is not None:
        meetings = sorted(
            (t, i, j) for (i, j), starts in merge_contacts(contacts).items() for t in starts
        )
    else:
        meetings = [(e.start, e.a, e.b) for e in contacts.events]
    messages = [
        Message(k, src, dest, float(t)) for k, (t, src) in enumerate(scenario.messages(seed))
    ]
    sim = _Sim(n, messages)
    log: list[str] = []
    ttl, cap, limit = constraints.ttl, constraints.buffer_capacity, constraints.exchange_limit

    heap: list = []
    seq = 0
    for m in messages:
        heap.append((m.created_at, seq, "gen", m.id))
        seq += 1
    for t, i, j in meetings:
        heap.append((t, seq, "meet", (i, j)))
        seq += 1
    heapq.heapify(heap)

    area = 0.0
    last_t = 0.0
    horizon = scenario.horizon

    def has_room(node: int) -> bool:
        return cap is None or len(sim.buffers[node]) < cap

    def offers(carrier: int, peer: int) -> list[int]:
        buf = list(sim.buffers[carrier])
        if not buf:
            return []
        dst = sim.destinations
        direct = [m for m in buf if dst[m] == peer and messages[m].status == LIVE]
        decision = router.decide(carrier, peer, buf, sim)
        skip = set(direct)
        return deque(direct + [m for m in decision.messages_to_forward if m not in skip])

    def transfer(carrier: int, peer: int, m: int, t: float) -> bool:
        if m not in sim.buffers[carrier]:
            return False
        msg = messages[m]
        hops = sim.buffers[carrier][m] + 1
        if peer == msg.destination:
            if msg.status != LIVE:
                return False
            msg.status, msg.delivered_at, msg.hops = DELIVERED, t, hops
            sim.seen[peer].add(m)
            if single:
                sim.remove(carrier, m)
            log.append(f"{_fmt(t)} dlv {m} {carrier} {peer} {hops}")
            return True
        if m in sim.buffers[peer] or (not single and m in sim.seen[peer]):
            return False
        if not has_room(peer):
            return False
        sim.add(peer, m, hops)
        if single:
            sim.remove(carrier, m)
        log.append(f"{_fmt(t)} fwd {m} {carrier} {peer} {hops}")
        return True

    while heap:
        t, _, kind, payload = heapq.heappop(heap)
        if t > horizon:
            break
        area += sim.copies * (t - last_t)
        last_t = t
        if kind == "gen":
            msg = messages[payload]
            if has_room(msg.source):
                msg.status = LIVE
                sim.add(msg.source, msg.id, 0)
                log.append(f"{_fmt(t)} gen {msg.id} {msg.source}")
            else:
                msg.status = DROPPED_BUF
                log.append(f"{_fmt(t)} drop_buf {msg.id} {msg.source}")
            if ttl is not None:
                heapq.heappush(heap, (t + ttl, seq, "expire", msg.id))
                seq += 1
        elif kind == "expire":
            msg = messages[payload]
            for node in sorted(sim.holders[msg.id]):
                sim.remove(node, msg.id)
            if msg.status == LIVE:
                msg.status = DROPPED_TTL
                log.append(f"{_fmt(t)} drop_ttl {msg.id}")
        else:
            a, b = payload
            log.append(f"{_fmt(t)} meet {a} {b}")
            router.on_contact(a, b, t)
            queues = [offers(a, b), offers(b, a)]
            ends = [(a, b), (b, a)]
            moved = 0
            turn = 0
            while (queues[0] or queues[1]) and (limit is None or moved < limit):
                if queues[turn]:
                    carrier, peer = ends[turn]
                    if transfer(carrier, peer, queues[turn].popleft(), t):
                        moved += 1
                        turn ^= 1
                    continue
                turn ^= 1
        if check_invariants:
            _check(sim, messages, single)
    area += sim.copies * (horizon - last_t)

    delivered = np.array([m.status == DELIVERED for m in messages], dtype=bool)
    lat = np.array(
        [m.delivered_at - m.created_at if m.status == DELIVERED else np.nan for m in messages]
    )
    hops = np.array([m.hops if m.status == DELIVERED else np.nan for m in messages])
    count = len(messages)
    metrics = MetricsReport(
        protocol=protocol,
        seed=seed,
        delivery_rate=float(delivered.sum() / count) if count else 0.0,
        avg_latency=float(np.nanmean(lat)) if delivered.any() else math.nan,
        avg_hop_count=float(np.nanmean(hops)) if delivered.any() else math.nan,
        avg_buffer_occupancy=area / (n * horizon),
        delivered=delivered,
        latencies=lat,
        hops=hops,
    )
    return SimulationResult(metrics, messages, log)


def _check(sim: _Sim, messages: list[Message], single: bool) -> None:
    for m in messages:
        holders = sim.holders[m.id]
        if m.status == LIVE and (not holders or (single and len(holders) != 1)):
            raise AssertionError(f"live message {m.id} has {len(holders)} copies")
        if m.status in (PENDING, DROPPED_TTL, DROPPED_BUF) and holders:
            raise AssertionError(f"{m.status} message {m.id} is buffered")
        if single and m.status == DELIVERED and holders:
            raise AssertionError(f"delivered single-copy message {m.id} still buffered")


@dataclass
class ProtocolSummary:
    protocol: str
    reports: list[MetricsReport]
    common_latency: list[float]

    def _ci(self, values) -> tuple[float, float]:
        v = np.array([x for x in values if not math.isnan(x)], dtype=float)
        if v.size == 0:
            return math.nan, math.nan
        half = 1.96 * v.std(ddof=1) / math.sqrt(v.size) if v.size > 1 else 0.0
        return float(v.mean()), float(half)

    @property
    def delivery_rate(self):
        return self._ci(r.delivery_rate for r in self.reports)

    @property
    def avg_latency(self):
        return self._ci(self.common_latency)

    @property
    def avg_hop_count(self):
        return self._ci(r.avg_hop_count for r in self.reports)

    @property
    def avg_buffer_occupancy(self):
        return self._ci(r.avg_buffer_occupancy for r in self.reports)


@dataclass
class Comparison:
    seeds: list[int]
    summaries: dict[str, ProtocolSummary] = field(default_factory=dict)

    def report(self, protocol: str, seed: int) -> MetricsReport:
        return self.summaries[protocol].reports[self.seeds.index(seed)]


def compare_protocols(
    scenario: Scenario,
    protocols: Sequence[str],
    seeds: Sequence[int],
    constraints: Constraints = Constraints(),
) -> Comparison:
    """Run every protocol on identical contacts and workloads per seed.

    ``avg_latency`` of each per-seed report is replaced by the mean over
    messages delivered by all listed protocols (``nan`` if none).
    """
    per: dict[str, list[MetricsReport]] = {p: [] for p in protocols}
    common: dict[str, list[float]] = {p: [] for p in protocols}
    for seed in seeds:
        reports = {
            p: run_simulation(scenario, p, constraints, seed).metrics
            for p in dict.fromkeys(protocols)
        }
        mask = np.logical_and.reduce([r.delivered for r in reports.values()])
        for p in protocols:
            r = reports[p]
            lat = r.restricted_latency(mask)
            per[p].append(replace(r, avg_latency=lat))
            common[p].append(lat)
    comp = Comparison(list(seeds))
    for p in protocols:
        comp.summaries[p] = ProtocolSummary(p, per[p], common[p])
    return comp


@dataclass
class SlotScenario:
    index: int
    start: float
    nodes: tuple
    rates: np.ndarray
    trace: ContactTrace
    workload: Workload | None
    degenerate: bool


def infocom_slotting(
    trace: ContactTrace,
    slot: float = 43200.0,
    *,
    messages: int = 1000,
    spacing: float = 5.0,
    generating_slots: int = 4,
) -> list[SlotScenario]:
    """Cut a trace into fixed slots with per-slot node sets and rates.

    The first ``generating_slots`` slots carry a workload of ``messages``
    messages every ``spacing`` seconds from nodes present in the slot.
    """
    if trace.horizon < slot:
        raise ConfigError(f"trace horizon {trace.horizon} shorter than one slot")
    count = math.ceil(trace.horizon / slot - 1e-9)
    out = []
    for k in range(count):
        window = trace.window(k * slot, (k + 1) * slot)
        nodes = tuple(sorted({x for e in window.events for x in (e.a, e.b)}))
        rates = empirical_rates(window) if len(window) else np.zeros((trace.n, trace.n))
        workload = None
        if k < generating_slots and nodes:
            workload = Workload(count=messages, spacing=spacing, start=k * slot, eligible=nodes)
        out.append(
            SlotScenario(k, k * slot, nodes, rates, window, workload, degenerate=not len(window))
        )
    return out
