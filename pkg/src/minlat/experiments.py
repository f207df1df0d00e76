"""Batch experiments behind the command line: runs, sweeps, convergence series.

Each task is a pure function of ``(config, point, seed)``; results are
merged in task order so output does not depend on worker scheduling.
"""

from __future__ import annotations

import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .config import ExperimentConfig, build_graph, build_scenario
from .protocol import EXACT, ESTIMATED, latency_error_series
from .simulator import NA, Constraints, compare_protocols

__all__ = [
    "METRICS_HEADER",
    "sweep_points",
    "run_point",
    "run_sweep",
    "convergence_rows",
    "format_csv",
]

METRICS_HEADER = ["protocol", "seed", "delivery_rate", "avg_latency", "avg_hops", "avg_buffer"]
SWEEP_HEADER = METRICS_HEADER + ["ttl", "buffer", "exchange"]
CONVERGENCE_HEADER = ["time", "series", "estimated_error", "achieved_error"]


def _num(x) -> str:
    if x is None:
        return "inf"
    if isinstance(x, float) and math.isnan(x):
        return NA
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.10g}"


def sweep_points(cfg: ExperimentConfig) -> list[Constraints]:
    """Cartesian grid over the configured sweep axes (base constraints otherwise)."""
    base = cfg.constraints
    axes = {
        "ttl": cfg.sweep.get("ttl", [base.ttl]),
        "buffer_capacity": cfg.sweep.get("buffer", [base.buffer_capacity]),
        "exchange_limit": cfg.sweep.get("exchange", [base.exchange_limit]),
    }
    return [
        replace(base, ttl=t, buffer_capacity=b, exchange_limit=e)
        for t, b, e in itertools.product(*axes.values())
    ]


def run_point(cfg: ExperimentConfig, constraints: Constraints, seed: int) -> list[list[str]]:
    scenario = build_scenario(cfg, seed)
    comp = compare_protocols(scenario, cfg.protocols, [seed], constraints)
    rows = []
    for p in cfg.protocols:
        r = comp.report(p, seed)
        rows.append(
            [
                p,
                str(seed),
                _num(r.delivery_rate),
                _num(r.avg_latency),
                _num(r.avg_hop_count),
                _num(r.avg_buffer_occupancy),
                _num(constraints.ttl),
                _num(constraints.buffer_capacity),
                _num(constraints.exchange_limit),
            ]
        )
    return rows


def _task(args):
    cfg, constraints, seed = args
    return run_point(cfg, constraints, seed)


def run_sweep(
    cfg: ExperimentConfig, base_seed: int = 0, jobs: int = 1, *, with_params: bool = True
) -> list[list[str]]:
    """Metrics rows for every (grid point, seed), protocols in config order."""
    seeds = [base_seed + k for k in range(cfg.seeds)]
    tasks = [(cfg, c, s) for c in sweep_points(cfg) for s in seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_task, tasks))
    else:
        chunks = [_task(t) for t in tasks]
    rows = [row for chunk in chunks for row in chunk]
    if not with_params:
        rows = [row[: len(METRICS_HEADER)] for row in rows]
    return rows


def convergence_rows(cfg: ExperimentConfig, seed: int = 0) -> list[list[str]]:
    """Network-average latency errors over time for the configured series."""
    graph, _ = build_graph(cfg, seed)
    times = np.arange(cfg.conv_interval, cfg.conv_horizon + 1e-9, cfg.conv_interval)
    rows = []
    for name in cfg.conv_series:
        mode = EXACT if name == "minlat" else ESTIMATED
        series = latency_error_series(
            graph,
            mode,
            cfg.conv_horizon,
            times,
            seed,
            centralized=(name == "centralized-e"),
        )
        for s in series:
            rows.append([_num(s.time), name, _num(s.estimated_error), _num(s.achieved_error)])
    return rows


def format_csv(header: list[str], rows: list[list[str]], comment: str | None = None) -> str:
    out = io.StringIO()
    if comment:
        out.write(f"# {comment}\n")
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(row) + "\n")
    return out.getvalue()
