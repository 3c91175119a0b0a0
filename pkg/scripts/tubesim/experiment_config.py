# -*- coding: utf-8 -*-

# experiment_config.py
"""
Load an experiment description from YAML into frozen dataclasses.

The grammar is documented in configs/README.md. Every error raised here is a
ConfigError carrying the 1-based line of the offending YAML node, taken from
the node marks of yaml.compose().

Public API:
    load_config(path)   -> ExperimentConfig
    parse_config(text)  -> ExperimentConfig
    ExperimentConfig.build_graph() / .build_scaling() / .simulation_config(...)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any
import hashlib
import logging

import yaml

from errors import ConfigError, GeometryError
from graph_core import MetricGraph, build_graph, validate
from reflected_sde import DEFAULT_MAX_STEPS, DEFAULT_STEP_COEFFICIENT, SimConfig
from tube_geometry import ScalingLaw

# ---------------------------------------------------------------------------
# Logging
# ---------------------------------------------------------------------------

logger = logging.getLogger("tubesim.experiment_config")

# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

KINDS = ("exit-stats", "metastable", "ctmc-compare", "pde", "localization")

# Section holding the per-kind parameters, e.g. kind "exit-stats" -> "exit_stats".
SECTION = {kind: kind.replace("-", "_") for kind in KINDS}

DEFAULT_SEED: int = 20240101
DEFAULT_TRAJECTORIES: int = 1000

AUTO = "auto"


# ---------------------------------------------------------------------------
# Line tracking
# ---------------------------------------------------------------------------

def _index_lines(node: yaml.Node, path: tuple = (), out: dict | None = None) -> dict:
    """Map every key path of a composed document to its 1-based line."""
    if out is None:
        out = {}
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            key = key_node.value
            try:
                key = int(key)
            except (TypeError, ValueError):
                pass
            _index_lines(value_node, path + (key,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            _index_lines(item, path + (i,), out)
    return out


class _Reader:
    """Typed access to the loaded document with line-anchored errors."""

    def __init__(self, data: Any, lines: dict):
        self.data = data
        self.lines = lines

    def line(self, path: tuple) -> int | None:
        while path and path not in self.lines:
            path = path[:-1]
        return self.lines.get(path)

    def fail(self, path: tuple, message: str) -> ConfigError:
        where = ".".join(str(p) for p in path) or "<root>"
        return ConfigError(f"{where}: {message}", line=self.line(path))

    def get(self, path: tuple, default: Any = ...) -> Any:
        node = self.data
        for p in path:
            if isinstance(node, dict) and p in node:
                node = node[p]
            elif isinstance(node, list) and isinstance(p, int) and 0 <= p < len(node):
                node = node[p]
            else:
                if default is ...:
                    raise self.fail(path, "missing required key")
                return default
        return node

    def number(self, path: tuple, default: Any = ..., positive: bool = False) -> float:
        value = self.get(path, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.fail(path, f"expected a number, got {value!r}")
        if positive and not value > 0:
            raise self.fail(path, f"must be positive, got {value}")
        return float(value)

    def integer(self, path: tuple, default: Any = ..., minimum: int | None = None) -> int:
        value = self.get(path, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.fail(path, f"expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            raise self.fail(path, f"must be at least {minimum}, got {value}")
        return value

    def sequence(self, path: tuple, default: Any = ...) -> list:
        value = self.get(path, default)
        if not isinstance(value, list):
            raise self.fail(path, f"expected a list, got {type(value).__name__}")
        return value

    def mapping(self, path: tuple, default: Any = ...) -> dict:
        value = self.get(path, default)
        if not isinstance(value, dict):
            raise self.fail(path, f"expected a mapping, got {type(value).__name__}")
        return value


# ---------------------------------------------------------------------------
# Spec dataclasses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphSpec:
    vertices: tuple[tuple[float, ...], ...]
    edges: tuple[tuple[tuple[int, int], float], ...]


@dataclass(frozen=True)
class ScalingSpec:
    coefficients: tuple[float, ...]
    exponents: tuple[float, ...]


@dataclass(frozen=True)
class SimulationSpec:
    step_coefficient: float = DEFAULT_STEP_COEFFICIENT
    max_steps: int = DEFAULT_MAX_STEPS


@dataclass(frozen=True)
class StartSpec:
    """A graph point: a vertex, or an edge with an arclength from its lower endpoint."""
    vertex: int | None = None
    edge: int | None = None
    arclength: float = 0.0

    def label(self) -> str:
        if self.vertex is not None:
            return f"O{self.vertex}"
        return f"I{self.edge}@{self.arclength:g}"


@dataclass(frozen=True)
class ExitStatsSpec:
    vertex: int
    levels: Any  # AUTO or {edge: level}
    trajectories: int
    randomize_start: bool = False
    delta: float | None = None
    event_log: bool = False


@dataclass(frozen=True)
class MetastableSpec:
    chain: int
    start: StartSpec
    observables: tuple[str, ...]
    time: Any  # AUTO or a number
    trajectories: int
    fiber: str = "axis"


@dataclass(frozen=True)
class CtmcCompareSpec:
    start: StartSpec
    s: tuple[float, ...]
    observables: tuple[str, ...]
    trajectories: int
    levels: str = AUTO
    localization_delta_fraction: float | None = None


@dataclass(frozen=True)
class PdeSpec:
    start: StartSpec
    observables: tuple[str, ...]
    times: tuple[Any, ...]  # numbers, "intermediate:<i>" or "critical:<s>"
    trajectories: int
    fiber: str = "axis"


@dataclass(frozen=True)
class LocalizationSpec:
    s: tuple[float, ...]
    delta_fraction: float
    trajectories: int
    vertex: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    kind: str
    dimension: int
    epsilons: tuple[float, ...]
    graph: GraphSpec
    scaling: ScalingSpec
    simulation: SimulationSpec
    params: Any
    seed: int = DEFAULT_SEED
    workers: int | None = None
    source_text: str = field(default="", repr=False, compare=False)

    @property
    def config_hash(self) -> str:
        """sha256 of the config text, first 16 hex digits."""
        return hashlib.sha256(self.source_text.encode("utf-8")).hexdigest()[:16]

    def build_graph(self) -> MetricGraph:
        graph = build_graph(self.graph.vertices, self.graph.edges)
        report = validate(graph)
        if not report.ok:
            raise GeometryError("invalid graph: " + "; ".join(report.problems))
        return graph

    def build_scaling(self) -> ScalingLaw:
        return ScalingLaw(self.scaling.coefficients, self.scaling.exponents, self.dimension)

    def simulation_config(self, seed: int | None = None) -> SimConfig:
        try:
            return SimConfig(
                step_coefficient=self.simulation.step_coefficient,
                max_steps=self.simulation.max_steps,
                seed=self.seed if seed is None else seed,
            )
        except ValueError as exc:
            raise ConfigError(f"simulation: {exc}") from exc


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _graph(r: _Reader, dimension: int) -> GraphSpec:
    vertices = []
    for i, v in enumerate(r.sequence(("graph", "vertices"))):
        path = ("graph", "vertices", i)
        if not isinstance(v, list) or len(v) != dimension:
            raise r.fail(path, f"vertex position must be a list of {dimension} numbers")
        vertices.append(tuple(r.number(path + (a,)) for a in range(dimension)))
    n = len(vertices)

    edges = []
    for i, _ in enumerate(r.sequence(("graph", "edges"))):
        path = ("graph", "edges", i)
        ends = r.sequence(path + ("ends",))
        if len(ends) != 2:
            raise r.fail(path + ("ends",), "an edge needs exactly two endpoint ids")
        ids = tuple(r.integer(path + ("ends", a)) for a in range(2))
        for a, j in enumerate(ids):
            if not 1 <= j <= n:
                raise r.fail(path + ("ends", a), f"unknown vertex id {j} (graph has {n})")
        lam = r.number(path + ("lambda",), positive=True)
        edges.append((ids, lam))
    return GraphSpec(tuple(vertices), tuple(edges))


def _scaling(r: _Reader, n_vertices: int) -> ScalingSpec:
    raw = r.get(("scaling",))
    if isinstance(raw, dict):
        c = r.number(("scaling", "c"), 1.0, positive=True)
        beta = r.number(("scaling", "beta"))
        return ScalingSpec((c,) * n_vertices, (beta,) * n_vertices)
    items = r.sequence(("scaling",))
    if len(items) != n_vertices:
        raise r.fail(("scaling",), f"need one entry per vertex ({n_vertices}), got {len(items)}")
    coeffs = tuple(r.number(("scaling", i, "c"), 1.0, positive=True) for i in range(n_vertices))
    betas = tuple(r.number(("scaling", i, "beta")) for i in range(n_vertices))
    return ScalingSpec(coeffs, betas)


def _vertex_id(r: _Reader, path: tuple, n_vertices: int) -> int:
    j = r.integer(path, minimum=1)
    if j > n_vertices:
        raise r.fail(path, f"unknown vertex id {j} (graph has {n_vertices})")
    return j


def _edge_id(r: _Reader, path: tuple, n_edges: int) -> int:
    k = r.integer(path, minimum=1)
    if k > n_edges:
        raise r.fail(path, f"unknown edge id {k} (graph has {n_edges})")
    return k


def _start(r: _Reader, path: tuple, n_vertices: int, n_edges: int) -> StartSpec:
    raw = r.mapping(path)
    if "vertex" in raw:
        return StartSpec(vertex=_vertex_id(r, path + ("vertex",), n_vertices))
    k = _edge_id(r, path + ("edge",), n_edges)
    return StartSpec(edge=k, arclength=r.number(path + ("arclength",)))


def _observables(r: _Reader, path: tuple, n_vertices: int) -> tuple[str, ...]:
    names = r.sequence(path)
    for i, name in enumerate(names):
        ok = isinstance(name, str) and (
            (name.startswith("bump:") and name[5:].isdigit() and 1 <= int(name[5:]) <= n_vertices)
            or name.startswith("const:")
            or name in ("x", "y", "z")
        )
        if not ok:
            raise r.fail(path + (i,), f"unknown observable {name!r}")
    return tuple(names)


def _numbers(r: _Reader, path: tuple) -> tuple[float, ...]:
    return tuple(r.number(path + (i,)) for i in range(len(r.sequence(path))))


def _levels(r: _Reader, path: tuple, n_edges: int, default: Any = AUTO) -> Any:
    raw = r.get(path, default)
    if raw in (AUTO, "edges"):
        return raw
    if isinstance(raw, dict):
        levels = {}
        for k in raw:
            if isinstance(k, bool) or not isinstance(k, int) or not 1 <= k <= n_edges:
                raise r.fail(path + (k,), f"unknown edge id {k!r} (graph has {n_edges})")
            levels[k] = r.number(path + (k,), positive=True)
        return levels
    raise r.fail(path, f"levels must be 'auto', 'edges' or a mapping edge -> level, got {raw!r}")


def _params(r: _Reader, kind: str, n_vertices: int, n_edges: int) -> Any:
    sec = (SECTION[kind],)
    r.mapping(sec)
    n_traj = r.integer(sec + ("trajectories",), DEFAULT_TRAJECTORIES, minimum=1)
    if kind == "exit-stats":
        j = _vertex_id(r, sec + ("vertex",), n_vertices)
        delta = r.get(sec + ("delta",), None)
        levels = _levels(r, sec + ("levels",), n_edges)
        if levels == "edges":
            raise r.fail(sec + ("levels",), "exit-stats levels must be 'auto' or a mapping")
        return ExitStatsSpec(
            vertex=j,
            levels=levels,
            trajectories=n_traj,
            randomize_start=bool(r.get(sec + ("randomize_start",), False)),
            delta=None if delta is None else r.number(sec + ("delta",), positive=True),
            event_log=bool(r.get(sec + ("event_log",), False)),
        )
    if kind == "metastable":
        time = r.get(sec + ("time",), AUTO)
        if time != AUTO:
            time = r.number(sec + ("time",), positive=True)
        return MetastableSpec(
            chain=r.integer(sec + ("chain",), 1, minimum=1),
            start=_start(r, sec + ("start",), n_vertices, n_edges),
            observables=_observables(r, sec + ("observables",), n_vertices),
            time=time,
            trajectories=n_traj,
            fiber=_fiber(r, sec + ("fiber",)),
        )
    if kind == "ctmc-compare":
        frac = r.get(sec + ("localization_delta_fraction",), None)
        levels = r.get(sec + ("levels",), AUTO)
        if levels not in (AUTO, "edges"):
            raise r.fail(sec + ("levels",), "ctmc-compare levels must be 'auto' or 'edges'")
        return CtmcCompareSpec(
            start=_start(r, sec + ("start",), n_vertices, n_edges),
            s=_numbers(r, sec + ("s",)),
            observables=_observables(r, sec + ("observables",), n_vertices),
            trajectories=n_traj,
            levels=levels,
            localization_delta_fraction=(
                None if frac is None
                else r.number(sec + ("localization_delta_fraction",), positive=True)
            ),
        )
    if kind == "pde":
        times = []
        for i, t in enumerate(r.sequence(sec + ("times",))):
            if isinstance(t, str) and (t.startswith("intermediate:") or t.startswith("critical:")):
                times.append(t)
            else:
                times.append(r.number(sec + ("times", i)))
        return PdeSpec(
            start=_start(r, sec + ("start",), n_vertices, n_edges),
            observables=_observables(r, sec + ("observables",), n_vertices),
            times=tuple(times),
            trajectories=n_traj,
            fiber=_fiber(r, sec + ("fiber",)),
        )
    vertex = r.get(sec + ("vertex",), None)
    return LocalizationSpec(
        s=_numbers(r, sec + ("s",)),
        delta_fraction=r.number(sec + ("delta_fraction",), 0.25, positive=True),
        trajectories=n_traj,
        vertex=None if vertex is None else _vertex_id(r, sec + ("vertex",), n_vertices),
    )


def _fiber(r: _Reader, path: tuple) -> str:
    fiber = r.get(path, "axis")
    if fiber not in ("axis", "sample"):
        raise r.fail(path, f"fiber must be 'axis' or 'sample', got {fiber!r}")
    return fiber


def parse_config(text: str) -> ExperimentConfig:
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark is not None else None
        raise ConfigError(f"YAML syntax error: {exc.problem}", line=line) from exc
    if root is None or not isinstance(data, dict):
        raise ConfigError("config must be a YAML mapping", line=1)
    r = _Reader(data, _index_lines(root))

    dimension = r.integer(("dimension",))
    if dimension not in (2, 3):
        raise r.fail(("dimension",), f"dimension must be 2 or 3, got {dimension}")
    kind = r.get(("kind",))
    if kind not in KINDS:
        raise r.fail(("kind",), f"kind must be one of {', '.join(KINDS)}, got {kind!r}")

    graph = _graph(r, dimension)
    n_vertices, n_edges = len(graph.vertices), len(graph.edges)
    epsilons = _numbers(r, ("epsilons",))
    if not epsilons:
        raise r.fail(("epsilons",), "at least one epsilon is required")
    for i, eps in enumerate(epsilons):
        if not 0.0 < eps < 1.0:
            raise r.fail(("epsilons", i), f"epsilon must lie in (0, 1), got {eps}")

    workers = r.get(("workers",), None)
    cfg = ExperimentConfig(
        name=str(r.get(("name",), "experiment")),
        kind=kind,
        dimension=dimension,
        epsilons=epsilons,
        graph=graph,
        scaling=_scaling(r, n_vertices),
        simulation=SimulationSpec(
            step_coefficient=r.number(("simulation", "step_coefficient"), DEFAULT_STEP_COEFFICIENT, positive=True),
            max_steps=r.integer(("simulation", "max_steps"), DEFAULT_MAX_STEPS, minimum=1),
        ),
        params=_params(r, kind, n_vertices, n_edges),
        seed=r.integer(("seed",), DEFAULT_SEED, minimum=0),
        workers=None if workers is None else r.integer(("workers",), minimum=1),
        source_text=text,
    )
    logger.debug("Parsed config %s (kind=%s, hash=%s)", cfg.name, cfg.kind, cfg.config_hash)
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    logger.info("Loading experiment config %s", path)
    return parse_config(text)
