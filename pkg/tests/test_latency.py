import math

import numpy as np
import pytest

from conftest import small_random_graph
from minlat.contact_model import ContactGraph
from minlat.latency import (
    InstanceTooLarge,
    SupportViolation,
    brute_force_optimal,
    enumerate_binary_latencies,
    expected_latencies,
    utility,
)


def test_two_node(two_node):
    B = np.array([[0, 0], [1, 0]])
    assert expected_latencies(two_node, B)[1] == 2.0
    assert utility(two_node, B) == 2.0


def test_chain(chain):
    B = np.zeros((3, 3))
    B[1, 0] = B[2, 1] = 1
    assert np.allclose(expected_latencies(chain, B), [0, 1, 3], rtol=1e-12)
    assert utility(chain, B) == pytest.approx(4.0)


def test_never_forwarding_node_is_infinite(chain):
    B = np.zeros((3, 3))
    B[1, 0] = 1
    L = expected_latencies(chain, B)
    assert math.isinf(L[2]) and math.isinf(utility(chain, B))


def test_node_feeding_a_sink_is_infinite():
    # 2 forwards only to 3, which never forwards
    g = ContactGraph(4, {(0, 1): 1, (1, 2): 1, (2, 3): 1})
    B = np.zeros((4, 4))
    B[1, 0] = 1
    B[2, 1] = B[2, 3] = 1
    L = expected_latencies(g, B)
    assert L[1] == 1 and math.isinf(L[2]) and math.isinf(L[3])


def test_support_violation(chain):
    B = np.zeros((3, 3))
    B[2, 0] = 1
    with pytest.raises(SupportViolation):
        expected_latencies(chain, B)


def test_rejects_out_of_range_and_destination_row(chain):
    P = np.zeros((3, 3))
    P[1, 0] = 1.5
    with pytest.raises(ValueError):
        expected_latencies(chain, P)
    P = np.zeros((3, 3))
    P[0, 1] = 1
    with pytest.raises(ValueError):
        expected_latencies(chain, P)


def test_brute_force_small_examples(two_node, chain):
    B, L = brute_force_optimal(two_node)
    assert B[1, 0] == 1 and L[1] == 2.0
    B, L = brute_force_optimal(chain)
    assert B[1, 0] == 1 and B[1, 2] == 0 and B[2, 1] == 1
    assert np.allclose(L, [0, 1, 3])


def test_brute_force_is_argmin(rng):
    g = small_random_graph(rng, n=4)
    B, L = brute_force_optimal(g)
    best = L.sum()
    for _, Ls in enumerate_binary_latencies(g):
        assert (Ls.sum(axis=1) >= best - 1e-12).all()


def test_brute_force_limit():
    g = ContactGraph(8, {(i, j): 1.0 for i in range(8) for j in range(i + 1, 8)})
    with pytest.raises(InstanceTooLarge):
        brute_force_optimal(g)


def test_enumeration_matches_direct_solver(rng):
    g = small_random_graph(rng, n=4)
    from minlat.latency import binary_edges

    edges = binary_edges(g)
    bits, L = next(enumerate_binary_latencies(g))
    for k in rng.choice(len(bits), size=min(20, len(bits)), replace=False):
        B = np.zeros((g.n, g.n))
        for (i, j), b in zip(edges, bits[k]):
            B[i, j] = b
        direct = expected_latencies(g, B)
        finite = np.isfinite(direct)
        assert np.array_equal(finite, np.isfinite(L[k]))
        assert np.allclose(direct[finite], L[k][finite], rtol=1e-9)


def _random_fractional(g, rng):
    P = rng.uniform(0, 1, (g.n, g.n)) * (g.rate_matrix() > 0)
    P[g.destination] = 0
    return P


def test_residual_of_latency_recursion(rng):
    for _ in range(30):
        g = small_random_graph(rng)
        P = _random_fractional(g, rng)
        L = expected_latencies(g, P)
        W = P * g.rate_matrix()
        for i in range(g.n):
            if i == g.destination or not np.isfinite(L[i]):
                continue
            rhs = (1 + W[i] @ np.where(np.isfinite(L), L, 0)) / W[i].sum()
            assert abs(rhs - L[i]) <= 1e-9 * L[i]


def test_fractional_never_beats_binary(rng):
    for _ in range(20):
        g = small_random_graph(rng)
        B, L_star = brute_force_optimal(g)
        for _ in range(50):
            L = expected_latencies(g, _random_fractional(g, rng))
            assert (L >= L_star * (1 - 1e-9)).all()


def test_per_node_optimality(rng):
    for _ in range(20):
        g = small_random_graph(rng)
        _, L_star = brute_force_optimal(g)
        per_node_min = np.full(g.n, np.inf)
        for _, L in enumerate_binary_latencies(g):
            per_node_min = np.minimum(per_node_min, L.min(axis=0))
        assert np.allclose(L_star, per_node_min, rtol=1e-9, atol=0)


def test_faster_neighbor_never_slows_others(rng):
    # raising lambda_jd changes only row j of the system, so L_j drops
    # and no other latency may rise
    for _ in range(40):
        g = small_random_graph(rng)
        d = g.destination
        P = _random_fractional(g, rng)
        base = expected_latencies(g, P)
        j = int(rng.choice(list(g.neighbors(d))))
        rates = dict(g.rates)
        key = (min(j, d), max(j, d))
        rates[key] *= 1.5
        L = expected_latencies(ContactGraph(g.n, rates, d), P)
        finite = np.isfinite(base)
        assert (L[finite] <= base[finite] * (1 + 1e-12)).all()
