import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minlat.relay import (
    LfpProblem,
    LinearProgram,
    LpError,
    RelayCandidate,
    best_relay_subset,
    charnes_cooper_transform,
    enumerate_relay_subsets,
    relay_lfp,
    solve_lfp,
    solve_lp_small,
)

EXAMPLES = [
    ([RelayCandidate(0, 0.1, 0.0), RelayCandidate(1, 1.0, 1.0)], {0, 1}, 20 / 11),
    ([RelayCandidate(0, 0.5, 0.0)], {0}, 2.0),
    ([RelayCandidate(0, 1.0, 0.0), RelayCandidate(7, 5.0, 10.0)], {0}, 1.0),
]


@pytest.mark.parametrize("cands,chosen,value", EXAMPLES)
def test_greedy_examples(cands, chosen, value):
    sel = best_relay_subset(cands)
    assert sel.chosen == chosen
    assert sel.value == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("cands,chosen,value", EXAMPLES)
def test_lp_examples(cands, chosen, value):
    lp_value, p = solve_lfp(relay_lfp(cands))
    assert lp_value == pytest.approx(value, rel=1e-9)
    assert set(np.flatnonzero(p > 0.5)) == {k for k, c in enumerate(cands) if c.id in chosen}


def test_one_candidate_lp_by_hand():
    sol = solve_lp_small(charnes_cooper_transform(relay_lfp([RelayCandidate(0, 0.5, 0.0)])))
    assert sol.objective == pytest.approx(2.0)
    assert sol.x == pytest.approx([2.0]) and sol.y == pytest.approx(2.0)
    assert sol.p == pytest.approx([1.0])


def test_empty_and_all_infinite():
    assert best_relay_subset([]).value == math.inf
    sel = best_relay_subset([RelayCandidate(3, 1.0, math.inf)])
    assert sel.value == math.inf and sel.chosen == frozenset()
    assert solve_lfp(relay_lfp([]))[0] == math.inf


def test_candidate_validation():
    with pytest.raises(ValueError):
        RelayCandidate(0, 0.0, 1.0)
    with pytest.raises(ValueError):
        RelayCandidate(0, 1.0, -1.0)
    with pytest.raises(ValueError):
        LfpProblem(np.ones(2), np.array([1.0, 0.0]))


def test_lp_optimum_below_all_ones_ratio(rng):
    for _ in range(50):
        k = int(rng.integers(1, 8))
        prob = LfpProblem(rng.uniform(0, 10, k), rng.uniform(0.01, 1, k))
        value, p = solve_lfp(prob)
        assert value <= prob.ratio(np.ones(k)) + 1e-12
        assert prob.ratio(p) == pytest.approx(value, rel=1e-9)


def test_lp_detects_infeasible():
    lp = LinearProgram(
        objective=np.array([1.0]),
        A_eq=np.array([[1.0]]),
        b_eq=np.array([1.0]),
        A_ub=np.array([[1.0]]),
        b_ub=np.array([0.5]),
    )
    with pytest.raises(LpError):
        solve_lp_small(lp)


candidate_lists = st.lists(
    st.tuples(
        st.floats(1e-3, 1.0),
        st.one_of(st.floats(0.0, 100.0), st.just(math.inf)),
    ),
    min_size=1,
    max_size=10,
)


def _cands(raw):
    return [RelayCandidate(k, lam, L) for k, (lam, L) in enumerate(raw)]


@settings(max_examples=300, deadline=None)
@given(candidate_lists)
def test_threshold_structure(raw):
    cands = _cands(raw)
    sel = best_relay_subset(cands)
    for c in cands:
        if c.id in sel.chosen:
            assert c.latency < sel.value
        elif math.isfinite(c.latency):
            assert c.latency >= sel.value


@settings(max_examples=300, deadline=None)
@given(candidate_lists)
def test_greedy_matches_enumeration_and_lp(raw):
    cands = _cands(raw)
    greedy = best_relay_subset(cands).value
    brute = enumerate_relay_subsets(cands).value
    lp, _ = solve_lfp(relay_lfp(cands))
    if math.isinf(greedy):
        assert math.isinf(brute) and math.isinf(lp)
    else:
        assert greedy == pytest.approx(brute, rel=1e-9)
        assert greedy == pytest.approx(lp, rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(candidate_lists, st.floats(1e-3, 1.0), st.floats(0.0, 50.0))
def test_adding_a_slow_candidate_changes_nothing(raw, lam, extra):
    cands = _cands(raw)
    sel = best_relay_subset(cands)
    if math.isinf(sel.value):
        return
    worse = RelayCandidate(len(cands), lam, sel.value + extra)
    assert best_relay_subset(cands + [worse]).value == sel.value
