import json
import math

import pytest

from minlat.cli import main
from minlat.config import build_graph, parse_config
from minlat.simulator import ConfigError

TWO_NODE = """
[scenario]
kind = custom
edges = 0 1 0.5
horizon = 200

[workload]
messages = 5
spacing = 1

[protocols]
list = minlat, epidemic

[convergence]
horizon = 100
interval = 10
series = minlat
"""

SWEEP = """
[scenario]
kind = net1
nodes = 12
m0 = 3
m = 2
rate_mean = 0.002
destination = random
horizon = 10000

[workload]
messages = 40
spacing = 5

[protocols]
list = minlat, prophetv2, epidemic, maxprop-s

[sweep]
ttl = 1000, inf
buffer = 5, inf

[run]
seeds = 2
"""


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


@pytest.mark.parametrize(
    "text",
    [
        "[bogus]\nx = 1\n",
        "[scenario]\ncolour = red\n",
        "[scenario]\nkind = net9\n",
        "[protocols]\nlist = minlat, tour\n",
        "[constraints]\nttl = -1\n",
        "[sweep]\nbuffer = 10, ten\n",
        "[scenario]\nkind = net2\n",
        "[scenario]\nkind = custom\nedges = 0 1\n",
        "[run]\nseeds = 0\n",
        "not an ini file",
    ],
)
def test_config_validation(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_config_defaults_and_digest():
    cfg = parse_config("[scenario]\nkind = net1\n")
    assert cfg.nodes == 41 and cfg.m0 == 5 and cfg.protocols[0] == "minlat"
    assert len(cfg.digest) == 64
    graph, trace = build_graph(cfg, seed=0)
    assert graph.num_edges == 190 and trace is None


def test_net2_and_net3_from_trace(tmp_path):
    lines = [f"{a} {b} {t} {t + 5}" for t in range(0, 3000, 100) for a, b in ((1, 2), (2, 3), (3, 4))]
    _write(tmp_path, "trace.txt", "\n".join(lines))
    for kind in ("net2", "net3"):
        cfg = parse_config(f"[scenario]\nkind = {kind}\ntrace = trace.txt\nk = 2\n", tmp_path)
        graph, trace = build_graph(cfg)
        assert graph.n == 4 and graph.num_edges == 3
        assert graph.rate(0, 1) == pytest.approx(0.01)
        assert (trace is not None) == (kind == "net3")


def test_generate_net1(tmp_path, capsys):
    cfg = _write(tmp_path, "a.ini", "[scenario]\nkind = net1\n")
    out = tmp_path / "g.txt"
    assert main(["generate", cfg, "--out", str(out), "--seed", "4"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "nodes 41 dest 0" and len(lines) == 191
    assert "edges=190" in capsys.readouterr().err


def test_generate_custom_two_node(tmp_path):
    cfg = _write(tmp_path, "a.ini", TWO_NODE)
    out = tmp_path / "g.txt"
    assert main(["generate", cfg, "--out", str(out)]) == 0
    assert out.read_text().splitlines()[1:] == ["0 1 0.5"]


def test_malformed_config_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, "bad.ini", "[scenario]\nkind = nope\n")
    assert main(["run", cfg]) == 1
    assert "error" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.ini")]) == 1


def test_solve_two_node_and_star(tmp_path, capsys):
    g = _write(tmp_path, "g.txt", "nodes 2 dest 0\n0 1 0.5\n")
    assert main(["solve", g]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["latencies"] == [0.0, 2.0] and out["convergence_bound"] == 2.0
    star = _write(tmp_path, "s.txt", "nodes 3 dest 0\n0 1 1\n0 2 0.1\n1 2 1\n")
    assert main(["solve", star, "--verify"]) == 0
    captured = capsys.readouterr()
    out = json.loads(captured.out)
    assert out["settlement_order"] == [1, 2]
    assert out["relays"]["2"] == [0, 1]
    assert out["latencies"][2] == pytest.approx(20 / 11)
    assert "pass" in captured.err


def test_solve_with_other_destination(tmp_path, capsys):
    g = _write(tmp_path, "g.txt", "nodes 3 dest 0\n0 1 1\n1 2 0.5\n")
    assert main(["solve", g, "--dest", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["destination"] == 2 and out["latencies"] == [3.0, 2.0, 0.0]


def test_solve_disconnected_is_validation_error(tmp_path):
    g = _write(tmp_path, "g.txt", "nodes 4 dest 0\n0 1 1\n2 3 1\n")
    assert main(["solve", g]) == 1


def test_verify_mismatch_exit_code(tmp_path, monkeypatch):
    import minlat.cli as cli

    monkeypatch.setattr(cli, "verify_against_oracle", lambda graph: False)
    g = _write(tmp_path, "g.txt", "nodes 2 dest 0\n0 1 0.5\n")
    assert main(["solve", g, "--verify"]) == 3
    assert main(["verify", "--graphs", "2", "--relay", "0"]) == 3


def test_verify_subcommand(capsys):
    assert main(["verify", "--graphs", "10", "--relay", "50", "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert "10/10" in out and "50/50" in out


def test_run_csv(tmp_path):
    cfg = _write(tmp_path, "a.ini", TWO_NODE)
    out = tmp_path / "m.csv"
    assert main(["run", cfg, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# config_sha256=")
    assert lines[1] == "protocol,seed,delivery_rate,avg_latency,avg_hops,avg_buffer"
    assert [l.split(",")[0] for l in lines[2:]] == ["minlat", "epidemic"]


def test_sweep_deterministic_and_parallel_safe(tmp_path):
    cfg = _write(tmp_path, "s.ini", SWEEP)
    outs = []
    for jobs in ("1", "1", "3"):
        out = tmp_path / f"s{len(outs)}.csv"
        assert main(["sweep", cfg, "--seed", "7", "--jobs", jobs, "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    rows = outs[0].decode().splitlines()[2:]
    assert len(rows) == 4 * 2 * 4
    assert {r.split(",")[6] for r in rows} == {"1000", "inf"}


def test_convergence_two_node(tmp_path):
    cfg = _write(tmp_path, "a.ini", TWO_NODE)
    out = tmp_path / "c.csv"
    assert main(["convergence", cfg, "--out", str(out), "--seed", "2"]) == 0
    rows = [l.split(",") for l in out.read_text().splitlines()[2:]]
    assert len(rows) == 10
    achieved = [float(r[3]) for r in rows]
    first_zero = next(k for k, a in enumerate(achieved) if a == 0)
    assert all(math.isinf(a) for a in achieved[:first_zero])
    assert all(a == 0 for a in achieved[first_zero:])
