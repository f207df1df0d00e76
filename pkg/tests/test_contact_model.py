import io

import numpy as np
import pytest

from minlat.contact_model import (
    ContactEvent,
    ContactGraph,
    ContactTrace,
    DisconnectedGraphError,
    TraceParseError,
    empirical_rates,
    generate_preferential_attachment,
    merge_contacts,
    parse_trace,
    read_graph,
    sample_contacts,
    sample_intermeeting,
    sparsify_top_k,
    write_graph,
)


def test_graph_rejects_disconnected():
    with pytest.raises(DisconnectedGraphError):
        ContactGraph(4, {(0, 1): 1.0, (2, 3): 1.0})


def test_graph_symmetric_access():
    g = ContactGraph(3, {(2, 0): 0.3, (1, 2): 0.7}, destination=2)
    assert g.rate(0, 2) == g.rate(2, 0) == 0.3
    assert g.neighbors(2) == {0: 0.3, 1: 0.7}
    assert not g.has_edge(0, 1)
    M = g.rate_matrix()
    assert np.array_equal(M, M.T)


@pytest.mark.parametrize("bad", [{(0, 0): 1.0}, {(0, 1): 0.0}, {(0, 1): -1.0}])
def test_graph_rejects_bad_rates(bad):
    with pytest.raises(ValueError):
        ContactGraph(2, bad)


def test_pa_edge_counts():
    g = generate_preferential_attachment(41, 5, 5, 1 / 1.3e4, seed=0)
    assert g.n == 41 and g.num_edges == 190
    k6 = generate_preferential_attachment(6, 5, 5, 1.0, seed=3)
    assert k6.num_edges == 15


@pytest.mark.parametrize("n,m0,m", [(10, 3, 4), (5, 5, 2), (4, 5, 2)])
def test_pa_invalid_parameters(n, m0, m):
    with pytest.raises(ValueError):
        generate_preferential_attachment(n, m0, m, 1.0, seed=0)


def test_pa_rate_mean_and_connectivity():
    means = []
    for seed in range(100):
        g = generate_preferential_attachment(41, 5, 5, 1 / 1.3e4, seed=seed)
        assert g.is_connected()
        means.append(np.mean(list(g.rates.values())))
    assert abs(np.mean(means) - 1 / 1.3e4) / (1 / 1.3e4) < 0.10


def test_pa_degree_right_skewed():
    hits = sum(
        max(g.degree(i) for i in range(g.n)) > 2 * 5
        for g in (generate_preferential_attachment(40, 5, 5, 1.0, seed=s) for s in range(100))
    )
    assert hits >= 95


def test_pa_deterministic_per_seed():
    a = generate_preferential_attachment(20, 3, 2, 0.1, seed=7)
    b = generate_preferential_attachment(20, 3, 2, 0.1, seed=7)
    assert a == b


def test_sparsify_hand_example():
    lam = np.zeros((3, 3))
    for (i, j), r in {(0, 1): 5, (0, 2): 1, (1, 2): 2}.items():
        lam[i, j] = lam[j, i] = r
    g = sparsify_top_k(lam, 1)
    assert set(g.edges) == {(0, 1), (1, 2)}


def test_sparsify_large_k_keeps_support(rng):
    lam = rng.uniform(0, 1, (8, 8))
    lam = np.triu(lam, 1)
    lam[lam < 0.4] = 0
    lam = lam + lam.T
    g = sparsify_top_k(lam, 7, allow_disconnected=True)
    assert set(g.edges) == {(i, j) for i in range(8) for j in range(i + 1, 8) if lam[i, j] > 0}


def test_sparsify_degree_and_subset(rng):
    lam = np.triu(rng.uniform(0, 1, (41, 41)), 1)
    lam[lam < 0.3] = 0
    lam = lam + lam.T
    g = sparsify_top_k(lam, 10)
    for i in range(41):
        assert g.degree(i) >= min(10, int((lam[i] > 0).sum()))
    for i, j in g.edges:
        assert lam[i, j] > 0


def test_sparsify_disconnected_raises():
    lam = np.zeros((4, 4))
    lam[0, 1] = lam[1, 0] = 1
    lam[2, 3] = lam[3, 2] = 1
    with pytest.raises(DisconnectedGraphError) as info:
        sparsify_top_k(lam, 3)
    assert info.value.graph is not None


def test_sample_intermeeting():
    rng = np.random.default_rng(0)
    xs = [sample_intermeeting(0.5, rng) for _ in range(100_000)]
    assert abs(np.mean(xs) - 2.0) / 2.0 < 0.02
    tiny = sample_intermeeting(1e-9, rng)
    assert np.isfinite(tiny) and tiny > 0
    with pytest.raises(ValueError):
        sample_intermeeting(0.0, rng)
    r1 = [sample_intermeeting(1.0, np.random.default_rng(9)) for _ in range(3)]
    r2 = [sample_intermeeting(1.0, np.random.default_rng(9)) for _ in range(3)]
    assert r1 == r2


def test_parse_trace_examples():
    t = parse_trace("1 2 10 20\n2 3 15 25")
    assert len(t) == 2 and t.n == 3
    assert [e.start for e in t.events] == [10, 15]
    empty = parse_trace("")
    assert len(empty) == 0 and empty.horizon == 0
    with pytest.raises(TraceParseError) as info:
        parse_trace("1 2 0 1\n1 2 20 10\n")
    assert info.value.lineno == 2


def test_parse_trace_comments_ack_and_labels():
    text = "# header\n7 9 5 6 1\n9 7 1 2 0\n  \n9 12 3 4\n"
    t = parse_trace(io.StringIO(text))
    assert len(t) == 2
    assert t.labels == (7, 9, 12)
    assert {(e.a, e.b) for e in t.events} == {(0, 1), (1, 2)}


def test_parse_trace_bad_token():
    with pytest.raises(TraceParseError):
        parse_trace("1 2 x 4\n")


def test_empirical_rates_examples():
    evs = [ContactEvent(0, 1, t, t) for t in (0, 100, 300)] + [ContactEvent(0, 2, 5, 5)]
    lam = empirical_rates(ContactTrace(tuple(evs), 300, 4))
    assert lam[0, 1] == pytest.approx(2 / 300, rel=1e-12)
    assert lam[0, 2] == 0 and lam[2, 3] == 0


def test_merge_contacts_overlaps():
    evs = (ContactEvent(0, 1, 0, 10), ContactEvent(1, 0, 5, 12), ContactEvent(0, 1, 20, 21))
    assert merge_contacts(ContactTrace(evs, 30, 2)) == {(0, 1): [0, 20]}


def test_empirical_rates_recover_sampled_rate():
    g = ContactGraph(2, {(0, 1): 0.01})
    trace = sample_contacts(g, 1e6, np.random.default_rng(4))
    assert len(trace) > 9000
    assert empirical_rates(trace)[0, 1] == pytest.approx(0.01, rel=0.05)


def test_graph_file_roundtrip():
    g = generate_preferential_attachment(15, 3, 2, 0.2, seed=1, destination=4)
    buf = io.StringIO()
    write_graph(g, buf)
    assert buf.getvalue().startswith("nodes 15 dest 4\n")
    assert read_graph(buf.getvalue()) == g


def test_poisson_meetings_pair_rates():
    import itertools

    from minlat.contact_model import poisson_meetings

    g = ContactGraph(3, {(0, 1): 0.2, (1, 2): 0.05})
    events = list(itertools.islice(poisson_meetings(g, np.random.default_rng(0)), 50_000))
    times = [t for t, _, _ in events]
    assert times == sorted(times)
    horizon = times[-1]
    for pair, lam in g.rates.items():
        count = sum(1 for _, a, b in events if (a, b) == pair)
        assert count / horizon == pytest.approx(lam, rel=0.03)
