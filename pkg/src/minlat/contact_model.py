"""Contact graphs, synthetic network generators and contact-trace ingestion.

Node ids are integers in ``[0, n)``. Meeting rates are in 1/seconds and are
stored once per unordered pair.
"""

from __future__ import annotations

import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

import numpy as np

__all__ = [
    "ContactGraph",
    "ContactEvent",
    "ContactTrace",
    "DisconnectedGraphError",
    "TraceParseError",
    "generate_preferential_attachment",
    "sparsify_top_k",
    "graph_from_rate_matrix",
    "sample_intermeeting",
    "sample_contacts",
    "poisson_meetings",
    "parse_trace",
    "merge_contacts",
    "empirical_rates",
    "write_graph",
    "read_graph",
]


class DisconnectedGraphError(ValueError):
    """Raised when a contact graph is not connected.

    The offending graph (built without the connectivity check) is kept on
    ``.graph`` so callers can decide to use it anyway.
    """

    def __init__(self, message: str, graph: "ContactGraph | None" = None):
        super().__init__(message)
        self.graph = graph


class TraceParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


class ContactGraph:
    """Undirected contact graph with a pairwise meeting rate on every edge.

    ``rates`` maps node pairs to meeting rates; either orientation may be
    given but not both with different values. The graph must be connected
    unless ``check_connected=False``.
    """

    def __init__(
        self,
        n: int,
        rates: dict[tuple[int, int], float],
        destination: int = 0,
        *,
        check_connected: bool = True,
    ):
        if n < 1:
            raise ValueError("graph needs at least one node")
        if not 0 <= destination < n:
            raise ValueError(f"destination {destination} outside [0, {n})")
        stored: dict[tuple[int, int], float] = {}
        for (i, j), lam in rates.items():
            if i == j:
                raise ValueError(f"self-edge at node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) outside [0, {n})")
            lam = float(lam)
            if not lam > 0 or math.isinf(lam):
                raise ValueError(f"rate on ({i}, {j}) must be positive and finite, got {lam}")
            key = _pair(i, j)
            if key in stored and stored[key] != lam:
                raise ValueError(f"asymmetric rates given for pair {key}")
            stored[key] = lam
        self.n = n
        self.destination = destination
        self._rates = dict(sorted(stored.items()))
        nbrs: list[dict[int, float]] = [dict() for _ in range(n)]
        for (i, j), lam in self._rates.items():
            nbrs[i][j] = lam
            nbrs[j][i] = lam
        self._neighbors = [dict(sorted(d.items())) for d in nbrs]
        if check_connected and not self.is_connected():
            raise DisconnectedGraphError("contact graph is not connected", self.copy_unchecked())

    def copy_unchecked(self) -> "ContactGraph":
        return ContactGraph(self.n, self._rates, self.destination, check_connected=False)

    @property
    def rates(self) -> dict[tuple[int, int], float]:
        return dict(self._rates)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return list(self._rates)

    @property
    def num_edges(self) -> int:
        return len(self._rates)

    def neighbors(self, i: int) -> dict[int, float]:
        """Neighbor -> rate map for node ``i``."""
        return dict(self._neighbors[i])

    def degree(self, i: int) -> int:
        return len(self._neighbors[i])

    def rate(self, i: int, j: int) -> float:
        return self._neighbors[i].get(j, 0.0)

    def has_edge(self, i: int, j: int) -> bool:
        return j in self._neighbors[i]

    def rate_matrix(self) -> np.ndarray:
        lam = np.zeros((self.n, self.n))
        for (i, j), r in self._rates.items():
            lam[i, j] = lam[j, i] = r
        return lam

    def mean_rate(self) -> float:
        return float(np.mean(list(self._rates.values()))) if self._rates else 0.0

    def with_destination(self, destination: int) -> "ContactGraph":
        return ContactGraph(self.n, self._rates, destination)

    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in self._neighbors[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ContactGraph):
            return NotImplemented
        return (self.n, self.destination, self._rates) == (other.n, other.destination, other._rates)

    def __repr__(self) -> str:
        return f"ContactGraph(n={self.n}, edges={self.num_edges}, destination={self.destination})"


@dataclass(frozen=True)
class ContactEvent:
    a: int
    b: int
    start: float
    end: float

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError(f"contact of node {self.a} with itself")
        if self.end < self.start:
            raise ValueError(f"contact ends before it starts ({self.start} > {self.end})")


@dataclass(frozen=True)
class ContactTrace:
    """Time-ordered contact events.

    ``labels[k]`` is the original id of compacted node ``k`` when the trace
    was parsed from a file.
    """

    events: tuple[ContactEvent, ...]
    horizon: float
    n: int
    labels: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(sorted(self.events, key=lambda e: e.start)))
        for e in self.events:
            if e.start < 0 or e.end > self.horizon:
                raise ValueError(f"event {e} outside [0, {self.horizon}]")
            if max(e.a, e.b) >= self.n:
                raise ValueError(f"event {e} references node outside [0, {self.n})")

    def __len__(self) -> int:
        return len(self.events)

    def window(self, start: float, stop: float) -> "ContactTrace":
        """Events starting in ``[start, stop)``, shifted so the window starts at 0."""
        evs = [
            ContactEvent(e.a, e.b, e.start - start, min(e.end, stop) - start)
            for e in self.events
            if start <= e.start < stop
        ]
        return ContactTrace(tuple(evs), stop - start, self.n, self.labels)


def generate_preferential_attachment(
    n: int,
    m0: int,
    m: int,
    rate_mean: float,
    seed: int | np.random.Generator | None = None,
    destination: int = 0,
) -> ContactGraph:
    """Preferential-attachment contact graph with uniform meeting rates.

    Starts from an ``m0``-clique; each later vertex attaches to ``m``
    distinct existing vertices chosen with probability proportional to
    their current degree. Edge rates are drawn from U(0, 2*rate_mean).
    """
    if m < 1 or m > m0 or n <= m0:
        raise ValueError(f"invalid parameters: need 1 <= m <= m0 < n, got n={n}, m0={m0}, m={m}")
    if not rate_mean > 0:
        raise ValueError("rate_mean must be positive")
    rng = np.random.default_rng(seed)
    edges: list[tuple[int, int]] = [(i, j) for i in range(m0) for j in range(i + 1, m0)]
    degree = np.zeros(n)
    degree[:m0] = m0 - 1
    for v in range(m0, n):
        weights = degree[:v]
        targets = rng.choice(v, size=m, replace=False, p=weights / weights.sum())
        for t in sorted(int(x) for x in targets):
            edges.append((t, v))
            degree[t] += 1
        degree[v] = m
    rates = {}
    for e in edges:
        lam = 0.0
        while lam <= 0.0:
            lam = rng.uniform(0.0, 2.0 * rate_mean)
        rates[e] = lam
    return ContactGraph(n, rates, destination)


def graph_from_rate_matrix(
    rates: np.ndarray, destination: int = 0, *, check_connected: bool = True
) -> ContactGraph:
    rates = np.asarray(rates, dtype=float)
    n = rates.shape[0]
    pairs = {
        (i, j): rates[i, j] for i in range(n) for j in range(i + 1, n) if rates[i, j] > 0
    }
    return ContactGraph(n, pairs, destination, check_connected=check_connected)


def sparsify_top_k(
    rates: np.ndarray, k: int, dest: int = 0, *, allow_disconnected: bool = False
) -> ContactGraph:
    """Keep edge (i, j) iff its rate is among the ``k`` largest of i or of j.

    Raises :class:`DisconnectedGraphError` when the result is disconnected
    unless ``allow_disconnected`` is set.
    """
    lam = np.asarray(rates, dtype=float)
    if lam.ndim != 2 or lam.shape[0] != lam.shape[1]:
        raise ValueError("rate matrix must be square")
    if not np.allclose(lam, lam.T) or (lam < 0).any():
        raise ValueError("rate matrix must be symmetric and nonnegative")
    n = lam.shape[0]
    keep = np.zeros((n, n), dtype=bool)
    for i in range(n):
        positive = [j for j in range(n) if j != i and lam[i, j] > 0]
        # stable order: larger rate first, then lower id
        positive.sort(key=lambda j: (-lam[i, j], j))
        for j in positive[:k]:
            keep[i, j] = keep[j, i] = True
    pruned = np.where(keep, lam, 0.0)
    graph = graph_from_rate_matrix(pruned, dest, check_connected=False)
    if not allow_disconnected and not graph.is_connected():
        raise DisconnectedGraphError(f"top-{k} sparsified graph is not connected", graph)
    return graph


def sample_intermeeting(rate: float, rng: np.random.Generator) -> float:
    if not rate > 0:
        raise ValueError(f"meeting rate must be positive, got {rate}")
    return float(rng.exponential(1.0 / rate))


def sample_contacts(graph: ContactGraph, horizon: float, rng: np.random.Generator) -> ContactTrace:
    """Instantaneous meetings on every edge as independent Poisson processes."""
    starts: list[np.ndarray] = []
    pairs: list[tuple[int, int]] = []
    for (i, j), lam in graph.rates.items():
        expected = lam * horizon
        t = np.empty(0)
        last = 0.0
        while True:
            size = int(expected + 5.0 * math.sqrt(expected) + 10)
            gaps = rng.exponential(1.0 / lam, size=size)
            times = last + np.cumsum(gaps)
            t = np.concatenate([t, times[times <= horizon]])
            if times[-1] > horizon:
                break
            last = times[-1]
        starts.append(t)
        pairs.extend([(i, j)] * len(t))
    if not pairs:
        return ContactTrace((), horizon, graph.n)
    all_t = np.concatenate(starts)
    order = np.argsort(all_t, kind="stable")
    events = tuple(
        ContactEvent(pairs[k][0], pairs[k][1], float(all_t[k]), float(all_t[k])) for k in order
    )
    return ContactTrace(events, horizon, graph.n)


def poisson_meetings(
    graph: ContactGraph, rng: np.random.Generator, batch: int = 4096
) -> Iterator[tuple[float, int, int]]:
    """Endless ``(time, a, b)`` meeting stream, generated lazily.

    Uses the superposition of the per-edge Poisson processes: gaps are
    exponential with the total rate and each meeting picks its pair with
    probability proportional to the pair's rate.
    """
    pairs = list(graph.rates)
    if not pairs:
        return
    lam = np.array([graph.rates[e] for e in pairs])
    total = lam.sum()
    cdf = np.cumsum(lam / total)
    t = 0.0
    while True:
        times = t + np.cumsum(rng.exponential(1.0 / total, size=batch))
        picks = np.minimum(np.searchsorted(cdf, rng.random(batch), side="right"), len(pairs) - 1)
        for tk, k in zip(times.tolist(), picks.tolist()):
            yield tk, pairs[k][0], pairs[k][1]
        t = float(times[-1])


def _parse_number(token: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise TraceParseError(lineno, f"not a number: {token!r}") from None
    if not math.isfinite(value):
        raise TraceParseError(lineno, f"non-finite value: {token!r}")
    return value


def parse_trace(source: str | TextIO | Iterable[str]) -> ContactTrace:
    """Parse ``a b start end [ack]`` lines into a trace.

    Lines with ``ack`` equal to 0 are dropped. Node labels are compacted to
    ``[0, N)`` in sorted label order.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    raw: list[tuple[str, str, float, float]] = []
    for lineno, line in enumerate(source, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (4, 5):
            raise TraceParseError(lineno, f"expected 4 or 5 columns, got {len(parts)}")
        a, b = parts[0], parts[1]
        start = _parse_number(parts[2], lineno)
        end = _parse_number(parts[3], lineno)
        if start < 0:
            raise TraceParseError(lineno, "negative start time")
        if end < start:
            raise TraceParseError(lineno, f"end {end} before start {start}")
        if a == b:
            raise TraceParseError(lineno, f"node {a} in contact with itself")
        if len(parts) == 5:
            if parts[4] not in ("0", "1"):
                raise TraceParseError(lineno, f"ack column must be 0 or 1, got {parts[4]!r}")
            if parts[4] == "0":
                continue
        raw.append((a, b, start, end))

    def label_key(s: str):
        try:
            return (0, float(s), s)
        except ValueError:
            return (1, 0.0, s)

    labels = sorted({x for a, b, _, _ in raw for x in (a, b)}, key=label_key)
    index = {lab: k for k, lab in enumerate(labels)}
    events = [ContactEvent(index[a], index[b], s, e) for a, b, s, e in raw]
    horizon = max((e.end for e in events), default=0.0)
    typed_labels = tuple(int(x) if x.lstrip("-").isdigit() else x for x in labels)
    return ContactTrace(tuple(events), horizon, len(labels), typed_labels)


def merge_contacts(trace: ContactTrace) -> dict[tuple[int, int], list[float]]:
    """Meeting start times per pair, with overlapping intervals of a pair merged."""
    intervals: dict[tuple[int, int], list[tuple[float, float]]] = defaultdict(list)
    for e in trace.events:
        intervals[_pair(e.a, e.b)].append((e.start, e.end))
    meetings: dict[tuple[int, int], list[float]] = {}
    for key, ivs in sorted(intervals.items()):
        ivs.sort()
        starts = [ivs[0][0]]
        current_end = ivs[0][1]
        for s, e in ivs[1:]:
            if s <= current_end:
                current_end = max(current_end, e)
            else:
                starts.append(s)
                current_end = e
        meetings[key] = starts
    return meetings


def empirical_rates(trace: ContactTrace) -> np.ndarray:
    """Dense symmetric matrix of inverse mean intermeeting times.

    Gaps are measured start to start; pairs seen fewer than twice get 0.
    """
    lam = np.zeros((trace.n, trace.n))
    for (i, j), starts in merge_contacts(trace).items():
        if len(starts) >= 2 and starts[-1] > starts[0]:
            lam[i, j] = lam[j, i] = (len(starts) - 1) / (starts[-1] - starts[0])
    return lam


def write_graph(graph: ContactGraph, out: TextIO) -> None:
    out.write(f"nodes {graph.n} dest {graph.destination}\n")
    for (i, j), lam in graph.rates.items():
        out.write(f"{i} {j} {lam!r}\n")


def read_graph(source: str | TextIO) -> ContactGraph:
    if isinstance(source, str):
        source = io.StringIO(source)
    header = None
    rates: dict[tuple[int, int], float] = {}
    for lineno, line in enumerate(source, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 4 or parts[0] != "nodes" or parts[2] != "dest":
                raise ValueError(f"line {lineno}: expected header 'nodes N dest D'")
            header = (int(parts[1]), int(parts[3]))
            continue
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'i j lambda'")
        rates[(int(parts[0]), int(parts[1]))] = float(parts[2])
    if header is None:
        raise ValueError("empty graph file")
    return ContactGraph(header[0], rates, header[1])
