"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 runtime failure, 3 a
verification check failed.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .centralized import centralized_minlat, convergence_time_bound
from .config import build_graph, load_config
from .contact_model import ContactGraph, DisconnectedGraphError, read_graph, write_graph
from .experiments import (
    CONVERGENCE_HEADER,
    METRICS_HEADER,
    SWEEP_HEADER,
    convergence_rows,
    format_csv,
    run_sweep,
)
from .latency import InstanceTooLarge, brute_force_optimal, utility
from .relay import (
    RelayCandidate,
    best_relay_subset,
    enumerate_relay_subsets,
    relay_lfp,
    solve_lfp,
)
from .simulator import ConfigError

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3


class VerificationFailed(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _jsonable(x: float):
    return None if math.isinf(x) else float(x)


def random_connected_graph(n: int, rng: np.random.Generator, p: float = 0.5, low=0.01, high=1.0):
    """Erdos-Renyi graph conditioned on connectivity, rates U(low, high)."""
    while True:
        rates = {
            (i, j): rng.uniform(low, high)
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < p
        }
        try:
            return ContactGraph(n, rates, int(rng.integers(n)))
        except DisconnectedGraphError:
            continue


def verify_against_oracle(graph: ContactGraph, rel_tol: float = 1e-9) -> bool:
    B_bf, L_bf = brute_force_optimal(graph)
    res = centralized_minlat(graph)
    if not np.array_equal(B_bf, res.decisions):
        return False
    return bool(np.allclose(res.latencies, L_bf, rtol=rel_tol, atol=0.0))


def cmd_generate(args) -> int:
    cfg = load_config(args.config)
    graph, _ = build_graph(cfg, args.seed)
    buf = io.StringIO()
    write_graph(graph, buf)
    _emit(buf.getvalue(), args.out)
    print(
        f"nodes={graph.n} edges={graph.num_edges} mean_rate={graph.mean_rate():.6g} "
        f"dest={graph.destination}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_solve(args) -> int:
    try:
        text = Path(args.graph).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read graph: {exc}") from None
    try:
        graph = read_graph(text)
    except DisconnectedGraphError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.dest is not None:
        graph = graph.with_destination(args.dest)
    res = centralized_minlat(graph)
    payload = {
        "destination": graph.destination,
        "settlement_order": res.order,
        "latencies": [_jsonable(x) for x in res.latencies],
        "relays": {str(i): sorted(int(j) for j in np.flatnonzero(res.decisions[i])) for i in range(graph.n)},
        "utility": _jsonable(utility(graph, res.decisions)),
        "convergence_bound": _jsonable(convergence_time_bound(graph, res.order)),
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    if args.verify:
        ok = verify_against_oracle(graph)
        print(f"verify brute-force oracle: {'pass' if ok else 'FAIL'}", file=sys.stderr)
        if not ok:
            raise VerificationFailed("centralized solution differs from brute force")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    rows = run_sweep(cfg, args.seed, args.jobs, with_params=False)
    comment = f"config_sha256={cfg.digest} seed={args.seed}"
    _emit(format_csv(METRICS_HEADER, rows, comment), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    rows = run_sweep(cfg, args.seed, args.jobs)
    comment = f"config_sha256={cfg.digest} seed={args.seed}"
    _emit(format_csv(SWEEP_HEADER, rows, comment), args.out)
    return EXIT_OK


def cmd_convergence(args) -> int:
    cfg = load_config(args.config)
    rows = convergence_rows(cfg, args.seed)
    comment = f"config_sha256={cfg.digest} seed={args.seed}"
    _emit(format_csv(CONVERGENCE_HEADER, rows, comment), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    failures = 0
    for k in range(args.graphs):
        graph = random_connected_graph(int(rng.integers(4, 7)), rng)
        if not verify_against_oracle(graph):
            failures += 1
            print(f"graph {k}: centralized != brute force", file=sys.stderr)
    print(f"oracle optimality: {args.graphs - failures}/{args.graphs} graphs agree")
    bad_relay = 0
    for _ in range(args.relay):
        size = int(rng.integers(1, 11))
        cands = [
            RelayCandidate(i, rng.uniform(1e-3, 1.0), math.inf if rng.random() < 0.1 else rng.uniform(0, 100))
            for i in range(size)
        ]
        greedy = best_relay_subset(cands).value
        brute = enumerate_relay_subsets(cands).value
        lp, _ = solve_lfp(relay_lfp(cands))
        if not all(math.isclose(greedy, v, rel_tol=1e-9) for v in (brute, lp)):
            bad_relay += 1
    print(f"relay subset agreement: {args.relay - bad_relay}/{args.relay} instances agree")
    if failures or bad_relay:
        raise VerificationFailed(f"{failures} graph and {bad_relay} relay mismatches")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base random seed")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    parser = argparse.ArgumentParser(prog="minlat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a contact graph file")
    p.add_argument("config")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", parents=[common], help="centralized optimal forwarding")
    p.add_argument("graph")
    p.add_argument("--dest", type=int, default=None)
    p.add_argument("--verify", action="store_true", help="compare with brute force (small graphs)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("run", parents=[common], help="simulate protocols, metrics CSV")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", parents=[common], help="constraint sweep, metrics CSV")
    p.add_argument("config")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("convergence", parents=[common], help="latency error time series")
    p.add_argument("config")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("verify", parents=[common], help="oracle cross-checks")
    p.add_argument("--graphs", type=int, default=200)
    p.add_argument("--relay", type=int, default=1000)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VerificationFailed as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (ConfigError, DisconnectedGraphError, InstanceTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
