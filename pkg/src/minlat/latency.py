"""Expected delivery latency of single-copy forwarding rules.

For a forwarding matrix ``P`` (row ``i`` = probabilities that node ``i``
hands a message to each neighbor when they meet), the expected latency
satisfies

    L_i * sum_j p_ij lam_ij - sum_j p_ij lam_ij L_j = 1,   L_d = 0.

Nodes whose forwarding chain can strand a message are assigned ``inf``
before the remaining block is solved.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .contact_model import ContactGraph

__all__ = [
    "SupportViolation",
    "InstanceTooLarge",
    "forwarding_weights",
    "infinite_nodes",
    "expected_latencies",
    "utility",
    "binary_edges",
    "enumerate_binary_latencies",
    "brute_force_optimal",
]

MAX_BRUTE_FORCE_CONFIGS = 2**24


class SupportViolation(ValueError):
    pass


class InstanceTooLarge(ValueError):
    pass


def forwarding_weights(graph: ContactGraph, P) -> np.ndarray:
    """Validated ``p_ij * lam_ij`` matrix."""
    P = np.asarray(P, dtype=float)
    n, d = graph.n, graph.destination
    if P.shape != (n, n):
        raise ValueError(f"decision matrix shape {P.shape} != {(n, n)}")
    if ((P < 0) | (P > 1)).any():
        raise ValueError("decision entries must lie in [0, 1]")
    lam = graph.rate_matrix()
    off_graph = (P > 0) & (lam == 0)
    if off_graph.any():
        i, j = map(int, np.argwhere(off_graph)[0])
        raise SupportViolation(f"p[{i},{j}] > 0 but nodes {i} and {j} never meet")
    if (P[d] != 0).any():
        raise SupportViolation("destination row must be zero")
    return P * lam


def _reach(adj: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Nodes with a directed path into ``targets`` (targets included)."""
    hit = targets.copy()
    frontier = targets.copy()
    while frontier.any():
        new = adj[:, frontier].any(axis=1) & ~hit
        hit |= new
        frontier = new
    return hit


def infinite_nodes(W: np.ndarray, destination: int) -> np.ndarray:
    """Mask of nodes with infinite expected latency under weights ``W``.

    A node is finite iff every node its messages can wander to still has a
    path to the destination.
    """
    n = W.shape[0]
    adj = W > 0
    adj[destination] = False
    is_d = np.zeros(n, dtype=bool)
    is_d[destination] = True
    stranded = ~_reach(adj, is_d)
    return _reach(adj, stranded) if stranded.any() else stranded


def expected_latencies(graph: ContactGraph, P) -> np.ndarray:
    """Expected latency from every node to ``graph.destination``.

    ``P`` may be fractional. Entries are ``inf`` for nodes that never
    deliver with probability one.
    """
    W = forwarding_weights(graph, P)
    d = graph.destination
    inf_mask = infinite_nodes(W, d)
    L = np.full(graph.n, np.inf)
    L[d] = 0.0
    finite = ~inf_mask
    finite[d] = False
    idx = np.flatnonzero(finite)
    if idx.size:
        block = -W[np.ix_(idx, idx)]
        block[np.diag_indices_from(block)] += W[idx].sum(axis=1)
        L[idx] = np.linalg.solve(block, np.ones(idx.size))
    return L


def utility(graph: ContactGraph, P) -> float:
    """Sum of expected latencies over all nodes (``inf`` if any is infinite)."""
    return float(expected_latencies(graph, P).sum())


def binary_edges(graph: ContactGraph) -> list[tuple[int, int]]:
    """Free entries of a binary decision matrix, in row-major order."""
    d = graph.destination
    return [(i, j) for i in range(graph.n) if i != d for j in graph.neighbors(i)]


def enumerate_binary_latencies(
    graph: ContactGraph, chunk: int = 1 << 15, limit: int = MAX_BRUTE_FORCE_CONFIGS
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(bits, latencies)`` for every binary matrix on the graph support.

    ``bits[k, e]`` is entry ``binary_edges(graph)[e]`` of configuration
    ``k``; configurations come in lexicographic order of the flattened
    matrix. Latencies are solved in vectorized batches.
    """
    edges = binary_edges(graph)
    n_edges = len(edges)
    total = 1 << n_edges
    if total > limit:
        raise InstanceTooLarge(f"{total} binary matrices exceed the enumeration limit {limit}")
    n, d = graph.n, graph.destination
    rows = np.array([e[0] for e in edges], dtype=int)
    cols = np.array([e[1] for e in edges], dtype=int)
    lam = graph.rate_matrix()[rows, cols]
    shifts = np.arange(n_edges - 1, -1, -1, dtype=np.int64)
    eye = np.eye(n)
    for lo in range(0, total, chunk):
        codes = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        bits = ((codes[:, None] >> shifts[None, :]) & 1).astype(np.int8)
        m = len(codes)
        W = np.zeros((m, n, n))
        W[:, rows, cols] = bits * lam
        adj = W > 0
        # batched reachability into d, then into stranded nodes
        reach = np.zeros((m, n), dtype=bool)
        reach[:, d] = True
        for _ in range(n):
            reach |= (adj & reach[:, None, :]).any(axis=2)
        bad = ~reach
        for _ in range(n):
            bad |= (adj & bad[:, None, :]).any(axis=2)
        A = -W
        A[:, np.arange(n), np.arange(n)] += W.sum(axis=2)
        pinned = bad.copy()
        pinned[:, d] = True
        A[pinned] = eye[np.nonzero(pinned)[1]]
        rhs = np.where(pinned, 0.0, 1.0)
        L = np.linalg.solve(A, rhs[..., None])[..., 0]
        L[:, d] = 0.0
        L[bad] = np.inf
        yield bits, L


def brute_force_optimal(
    graph: ContactGraph, limit: int = MAX_BRUTE_FORCE_CONFIGS
) -> tuple[np.ndarray, np.ndarray]:
    """Exhaustive minimizer of total latency over binary decision matrices.

    Ties go to the lexicographically smallest flattened matrix.
    """
    edges = binary_edges(graph)
    best_u = np.inf
    best_bits = None
    best_L = None
    for bits, L in enumerate_binary_latencies(graph, limit=limit):
        u = L.sum(axis=1)
        k = int(np.argmin(u))
        if best_bits is None or u[k] < best_u:
            best_u, best_bits, best_L = u[k], bits[k], L[k]
    B = np.zeros((graph.n, graph.n))
    for (i, j), b in zip(edges, best_bits):
        B[i, j] = b
    return B, best_L.copy()
