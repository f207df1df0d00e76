"""Experiment configuration: a flat INI file with fixed sections and keys."""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import PROTOCOLS
from .contact_model import (
    ContactGraph,
    empirical_rates,
    generate_preferential_attachment,
    parse_trace,
    read_graph,
    sparsify_top_k,
)
from .simulator import ConfigError, Constraints, Scenario, Workload

__all__ = ["ExperimentConfig", "load_config", "parse_config", "build_graph", "build_scenario"]

INFOCOM_MEAN_RATE = 1.0 / 1.3e4

SCHEMA: dict[str, dict[str, type]] = {
    "scenario": {
        "kind": str,
        "nodes": int,
        "m0": int,
        "m": int,
        "rate_mean": float,
        "destination": str,
        "k": int,
        "trace": str,
        "window_start": float,
        "window_end": float,
        "graph": str,
        "edges": str,
        "graph_seed": int,
        "horizon": float,
    },
    "workload": {"messages": int, "spacing": float, "start": float},
    "protocols": {"list": str},
    "constraints": {"ttl": float, "buffer": int, "exchange": int},
    "sweep": {"ttl": str, "buffer": str, "exchange": str},
    "run": {"seeds": int},
    "convergence": {"horizon": float, "interval": float, "series": str},
}

KINDS = ("net1", "net2", "net3", "custom")
SERIES = ("minlat-e", "minlat", "centralized-e")


def _grid(text: str, cast) -> list:
    out = []
    for tok in text.replace(",", " ").split():
        if tok.lower() in ("inf", "none", "unlimited"):
            out.append(None)
        else:
            try:
                v = cast(float(tok))
            except ValueError:
                raise ConfigError(f"bad grid value {tok!r}") from None
            if not v > 0:
                raise ConfigError(f"grid values must be positive, got {tok}")
            out.append(v)
    if not out:
        raise ConfigError("empty sweep grid")
    return out


@dataclass
class ExperimentConfig:
    kind: str = "net1"
    nodes: int = 41
    m0: int = 5
    m: int = 5
    rate_mean: float = INFOCOM_MEAN_RATE
    destination: str | None = None
    k: int = 10
    trace: Path | None = None
    window: tuple[float, float] | None = None
    graph: Path | None = None
    edges: list[tuple[int, int, float]] = field(default_factory=list)
    graph_seed: int | None = None
    horizon: float = 3 * 86400.0
    workload: Workload = Workload()
    protocols: list[str] = field(
        default_factory=lambda: ["minlat", "prophetv2", "epidemic", "maxprop-s"]
    )
    constraints: Constraints = Constraints()
    sweep: dict[str, list] = field(default_factory=dict)
    seeds: int = 1
    conv_horizon: float = 5e4
    conv_interval: float = 500.0
    conv_series: list[str] = field(default_factory=lambda: ["minlat-e", "minlat"])
    source_text: str = ""

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.source_text.encode()).hexdigest()


def parse_config(text: str, base_dir: Path | str = ".") -> ExperimentConfig:
    """Parse and validate config text; unknown sections or keys are errors."""
    base_dir = Path(base_dir)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values: dict[str, dict] = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        values[section] = {}
        for key, raw in cp.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            cast = SCHEMA[section][key]
            try:
                values[section][key] = cast(float(raw)) if cast is int else cast(raw)
            except ValueError:
                raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None

    cfg = ExperimentConfig(source_text=text)
    sc = values.get("scenario", {})
    cfg.kind = sc.get("kind", cfg.kind)
    if cfg.kind not in KINDS:
        raise ConfigError(f"scenario kind must be one of {KINDS}, got {cfg.kind!r}")
    for key in ("nodes", "m0", "m", "rate_mean", "k", "horizon", "graph_seed"):
        if key in sc:
            setattr(cfg, key, sc[key])
    if "destination" in sc:
        cfg.destination = sc["destination"].strip()
    if cfg.destination not in (None, "random") and not cfg.destination.isdigit():
        raise ConfigError("destination must be a node index or 'random'")
    if "trace" in sc:
        cfg.trace = base_dir / sc["trace"]
    if "graph" in sc:
        cfg.graph = base_dir / sc["graph"]
    if "window_start" in sc or "window_end" in sc:
        cfg.window = (sc.get("window_start", 0.0), sc.get("window_end", math.inf))
    if "edges" in sc:
        for chunk in sc["edges"].split(";"):
            parts = chunk.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise ConfigError(f"edge entry {chunk.strip()!r} is not 'i j rate'")
            try:
                cfg.edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError:
                raise ConfigError(f"edge entry {chunk.strip()!r} is not 'i j rate'") from None
    if cfg.kind in ("net2", "net3") and cfg.trace is None:
        raise ConfigError(f"{cfg.kind} needs [scenario] trace")
    if cfg.kind == "custom" and cfg.graph is None and not cfg.edges:
        raise ConfigError("custom scenario needs [scenario] graph or edges")
    if not cfg.horizon > 0:
        raise ConfigError("horizon must be positive")

    wl = values.get("workload", {})
    cfg.workload = Workload(
        count=wl.get("messages", 1000), spacing=wl.get("spacing", 5.0), start=wl.get("start", 0.0)
    )
    if cfg.workload.count < 0 or not cfg.workload.spacing >= 0:
        raise ConfigError("workload counts and spacing must be nonnegative")

    if "list" in values.get("protocols", {}):
        names = [p.strip() for p in values["protocols"]["list"].split(",") if p.strip()]
        for p in names:
            if p not in PROTOCOLS:
                raise ConfigError(f"unknown protocol {p!r}")
        if not names:
            raise ConfigError("protocol list is empty")
        cfg.protocols = names

    cons = values.get("constraints", {})
    cfg.constraints = Constraints(cons.get("ttl"), cons.get("buffer"), cons.get("exchange"))

    sw = values.get("sweep", {})
    casts = {"ttl": float, "buffer": int, "exchange": int}
    cfg.sweep = {key: _grid(sw[key], casts[key]) for key in casts if key in sw}

    cfg.seeds = values.get("run", {}).get("seeds", 1)
    if cfg.seeds < 1:
        raise ConfigError("seeds must be >= 1")

    cv = values.get("convergence", {})
    cfg.conv_horizon = cv.get("horizon", cfg.conv_horizon)
    cfg.conv_interval = cv.get("interval", cfg.conv_interval)
    if "series" in cv:
        cfg.conv_series = [s.strip() for s in cv["series"].split(",") if s.strip()]
        for s in cfg.conv_series:
            if s not in SERIES:
                raise ConfigError(f"unknown convergence series {s!r}")
    if not (cfg.conv_horizon > 0 and cfg.conv_interval > 0):
        raise ConfigError("convergence horizon and interval must be positive")
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, path.parent)


def _load_trace(cfg: ExperimentConfig):
    try:
        with open(cfg.trace, encoding="utf-8") as fh:
            trace = parse_trace(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read trace: {exc}") from None
    if cfg.window is not None:
        start, stop = cfg.window
        trace = trace.window(start, min(stop, trace.horizon + 1e-9))
    return trace


def _destination(cfg: ExperimentConfig, n: int, rng: np.random.Generator) -> int:
    if cfg.destination == "random":
        return int(rng.integers(n))
    d = int(cfg.destination or 0)
    if d >= n:
        raise ConfigError(f"destination {d} outside [0, {n})")
    return d


def build_graph(cfg: ExperimentConfig, seed: int = 0):
    """Contact graph for the scenario, plus the replay trace for net3."""
    gseed = cfg.graph_seed if cfg.graph_seed is not None else seed
    rng = np.random.default_rng(gseed)
    if cfg.kind == "net1":
        dest = _destination(cfg, cfg.nodes, rng)
        graph = generate_preferential_attachment(cfg.nodes, cfg.m0, cfg.m, cfg.rate_mean, rng, dest)
        return graph, None
    if cfg.kind == "custom":
        if cfg.graph is not None:
            try:
                graph = read_graph(cfg.graph.read_text(encoding="utf-8"))
            except OSError as exc:
                raise ConfigError(f"cannot read graph: {exc}") from None
            if cfg.destination is not None:
                graph = graph.with_destination(_destination(cfg, graph.n, rng))
            return graph, None
        n = max(max(i, j) for i, j, _ in cfg.edges) + 1
        dest = _destination(cfg, n, rng)
        return ContactGraph(n, {(i, j): lam for i, j, lam in cfg.edges}, dest), None
    trace = _load_trace(cfg)
    dest = _destination(cfg, trace.n, rng)
    graph = sparsify_top_k(empirical_rates(trace), cfg.k, dest)
    return graph, (trace if cfg.kind == "net3" else None)


def build_scenario(cfg: ExperimentConfig, seed: int = 0) -> Scenario:
    graph, trace = build_graph(cfg, seed)
    return Scenario(graph, cfg.horizon, cfg.workload, trace)
