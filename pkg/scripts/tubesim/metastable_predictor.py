# -*- coding: utf-8 -*-

# metastable_predictor.py
"""
Monte Carlo observables of the tube diffusion against the limiting chains.

Responsibilities:
- Graph observables F (vertex values, linear along edges) and their
  composition with the continuous projection Pi^eps.
- Fixed-time Monte Carlo estimates E_z F(Pi^eps(Z(t))), which double as the
  Feynman-Kac value of the Neumann heat problem with data F o Pi^eps.
- Deterministic predictions at the intermediate scales (absorption law mu^i)
  and at the first critical scale (vertex chain Y(s)).
- The localization check: a trajectory that has not left the smallest ball
  should still sit next to its vertex at time s T^1.

Public API:
    Observable, bump, constant, coordinate
    mc_observable(domain, z, t, F, n, config, workers)
    pde_solution(domain, z, t, phi, n, config, workers)
    predict_intermediate(graph, scaling, i, x, F)
    predict_first_critical(graph, scaling, levels, x, s, F)
    localization_check(domain, j1, s, delta, n, config, workers)
    PredictionReport
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence
import logging
import math

import numpy as np

from errors import GeometryError, SimulationError
from exit_statistics import TestReport
from graph_core import GraphPoint, MetricGraph
from limit_models import (
    absorption_distribution,
    ctmc_build,
    ctmc_law_at,
    hitting_row,
    intermediate_chain,
    mu_extended,
    timescale_ladder,
)
from reflected_sde import EXITED, HORIZON, SimConfig, collar_start, fiber_point
from rng_streams import stream
from tube_geometry import ScalingLaw, SectionFamily, TubeDomain, collar_adjusted_levels
import trajectory_pool

# ---------------------------------------------------------------------------
# Logging
# ---------------------------------------------------------------------------

logger = logging.getLogger("tubesim.metastable_predictor")

# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

MIN_TRAJECTORIES: int = 100

# Above this censored fraction an estimate is reported but flagged invalid.
MAX_CENSORING: float = 0.01

# Discrepancy threshold in standard errors.
SE_BAND: float = 3.0

# Localization probability that still counts as "near the vertex".
LOCALIZATION_THRESHOLD: float = 0.05

# Random transverse points per fiber, besides the axis point.
FIBER_SAMPLES: int = 8


# ---------------------------------------------------------------------------
# Observables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Observable:
    """Vertex values with linear interpolation along every edge."""
    values: tuple[float, ...]
    name: str = "F"

    def at_vertex(self, j: int) -> float:
        return self.values[j - 1]

    def __call__(self, graph: MetricGraph, x: GraphPoint) -> float:
        return float(hitting_row(graph, x) @ np.asarray(self.values))

    def on_domain(self, domain: TubeDomain, z: Sequence[float]) -> float:
        """phi_eps(z) = F(Pi^eps(z))."""
        return self(domain.graph, domain.continuous_projection(z))

    @property
    def is_constant(self) -> bool:
        return len(set(self.values)) == 1


def bump(n_vertices: int, j: int) -> Observable:
    values = [0.0] * n_vertices
    values[j - 1] = 1.0
    return Observable(tuple(values), name=f"bump{j}")


def constant(n_vertices: int, c: float = 1.0) -> Observable:
    return Observable((float(c),) * n_vertices, name=f"const{c:g}")


def coordinate(graph: MetricGraph, axis: int = 0) -> Observable:
    values = tuple(float(v.position[axis]) for v in graph.vertices)
    return Observable(values, name=f"x{axis}")


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    se: float
    n: int
    censored: int

    @property
    def censoring_rate(self) -> float:
        total = self.n + self.censored
        return self.censored / total if total else 0.0

    @property
    def valid(self) -> bool:
        return self.censoring_rate <= MAX_CENSORING


@dataclass(frozen=True)
class PredictionReport:
    experiment: str
    observable: str
    estimate: float
    se: float
    prediction: float
    n: int
    censored: int
    tolerance: float
    valid: bool = True

    @property
    def discrepancy(self) -> float:
        """|estimate - prediction| in standard errors; inf when SE is zero and they differ."""
        gap = abs(self.estimate - self.prediction)
        if self.se > 0.0:
            return gap / self.se
        return 0.0 if gap <= 1e-12 else math.inf

    @property
    def passed(self) -> bool:
        return self.valid and abs(self.estimate - self.prediction) <= self.tolerance

    @property
    def verdict(self) -> str:
        if not self.valid:
            return "invalid"
        return "pass" if self.passed else "fail"


def report(
    experiment: str,
    observable: Observable,
    mc: MonteCarloEstimate,
    prediction: float,
    floor: float = 0.0,
) -> PredictionReport:
    """Pass band is max(3 SE, floor); exact agreement passes when SE is zero."""
    tolerance = max(SE_BAND * mc.se, floor, 1e-12)
    return PredictionReport(
        experiment=experiment,
        observable=observable.name,
        estimate=mc.estimate,
        se=mc.se,
        prediction=prediction,
        n=mc.n,
        censored=mc.censored,
        tolerance=tolerance,
        valid=mc.valid,
    )


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

class FiberStart:
    """
    Per-trajectory start on the fiber over x; picklable for the worker pool.

    With `randomize`, trajectories cycle through the axis point and
    FIBER_SAMPLES fixed transverse points of the fiber.
    """

    def __init__(self, domain: TubeDomain, x: GraphPoint, seed: int, randomize: bool):
        self.domain = domain
        self.x = x
        self.points = fiber_sample(domain, x, seed) if randomize else [fiber_point(domain, x)]

    def __call__(self, index: int) -> np.ndarray:
        return self.points[index % len(self.points)]


def fiber_sample(domain: TubeDomain, x: GraphPoint, seed: int) -> list[np.ndarray]:
    """Axis point over x plus FIBER_SAMPLES random transverse points."""
    rng = stream(seed, 0, "fiber")
    return [fiber_point(domain, x)] + [fiber_point(domain, x, rng) for _ in range(FIBER_SAMPLES)]


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    if len(values) < 2:
        return float(values.mean()), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values)))


def mc_observable(
    domain: TubeDomain,
    z: Sequence[float] | Callable[[int], np.ndarray],
    t: float,
    observable: Observable,
    n: int,
    config: SimConfig,
    workers: int = 1,
) -> MonteCarloEstimate:
    """Sample mean of F(Pi^eps(Z(t))) over n independent trajectories."""
    if t < 0.0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if n < MIN_TRAJECTORIES:
        raise ValueError(f"need at least {MIN_TRAJECTORIES} trajectories, got {n}")

    finals = trajectory_pool.positions(domain, z, t, config, n, workers)
    values = np.array([observable.on_domain(domain, p) for p in finals if p is not None])
    censored = n - len(values)
    if len(values) == 0:
        raise SimulationError("every trajectory was censored; raise max_steps")
    mean, se = _mean_se(values)
    mc = MonteCarloEstimate(mean, se, len(values), censored)
    if not mc.valid:
        logger.warning(
            "Observable %s at t=%.4g: censoring %.2f%% above %.0f%%; estimate flagged invalid.",
            observable.name, t, 100 * mc.censoring_rate, 100 * MAX_CENSORING,
        )
    return mc


def pde_solution(
    domain: TubeDomain,
    z: Sequence[float] | Callable[[int], np.ndarray],
    t: float,
    phi: Observable,
    n: int,
    config: SimConfig,
    workers: int = 1,
) -> MonteCarloEstimate:
    """rho_eps(t, z) = E_z phi(Z(t)) for the Neumann heat flow with data phi o Pi^eps."""
    return mc_observable(domain, z, t, phi, n, config, workers)


# ---------------------------------------------------------------------------
# Limit predictions
# ---------------------------------------------------------------------------

def predict_intermediate(
    graph: MetricGraph,
    scaling: ScalingLaw,
    i: int,
    x: GraphPoint,
    observable: Observable,
) -> float:
    """sum_j' F(O_j') mu^i(x, O_j')."""
    dist = absorption_distribution(intermediate_chain(graph, scaling, i))
    return float(mu_extended(dist, graph, x) @ np.asarray(observable.values))


def predict_first_critical(
    graph: MetricGraph,
    scaling: ScalingLaw,
    levels: Mapping[int, float] | None,
    x: GraphPoint,
    s: float,
    observable: Observable,
) -> float:
    """sum_j p(x, O_j) E_{O_j} F(Y(s))."""
    ctmc = ctmc_build(graph, scaling, levels)
    weights = hitting_row(graph, x)
    values = np.asarray(observable.values)
    total = 0.0
    for j, w in enumerate(weights, start=1):
        if w > 0.0:
            total += w * float(ctmc_law_at(ctmc, j, s) @ values)
    return total


# ---------------------------------------------------------------------------
# Localization
# ---------------------------------------------------------------------------

def minimal_vertex(scaling: ScalingLaw) -> int:
    first = timescale_ladder(scaling).group(1)
    if len(first.members) != 1:
        raise GeometryError(
            f"a unique smallest vertex is required, got {list(first.members)}"
        )
    return first.members[0]


def localization_check(
    domain: TubeDomain,
    j1: int,
    s: float,
    delta: float,
    n: int,
    config: SimConfig,
    workers: int = 1,
    randomize: bool = False,
) -> TestReport:
    """
    P(d(Pi^eps(Z(s T^1)), O_j1) >= delta, not yet escaped) from the collar of j1.

    Escape means reaching C_{eps,j1}(L^eps); trajectories that escape before
    s T^1 count as localized.
    """
    ladder = timescale_ladder(domain.scaling)
    horizon = s * ladder.timescale(ladder.class_of(j1), domain.epsilon)
    levels = collar_adjusted_levels(domain, j1)
    family = SectionFamily(j1, levels)
    seed = config.seed

    start = _CollarStart(domain, j1, seed, randomize)
    records = trajectory_pool.section_hits(
        domain, start, [family], config, n, workers, horizon=horizon
    )

    far = 0
    counted = 0
    censored = 0
    for r in records:
        if r.status == EXITED:
            counted += 1
        elif r.status == HORIZON:
            counted += 1
            x = domain.continuous_projection(r.exit_point)
            if domain.graph.vertex_distance(x, j1) >= delta:
                far += 1
        else:
            censored += 1
    if counted == 0:
        raise SimulationError("every localization trajectory was censored")
    p = far / counted
    logger.info(
        "Localization at s=%.3g (t=%.4g), delta=%.3g: %d/%d far, %d censored",
        s, horizon, delta, far, counted, censored,
    )
    return TestReport(
        name="localization",
        statistic=p,
        threshold=LOCALIZATION_THRESHOLD,
        passed=p < LOCALIZATION_THRESHOLD,
        sample_size=counted,
        censored=censored,
        notes=f"s={s:g} delta={delta:g}",
    )


class _CollarStart:
    def __init__(self, domain: TubeDomain, j: int, seed: int, randomize: bool):
        self.domain = domain
        self.j = j
        self.seed = seed
        self.randomize = randomize

    def __call__(self, index: int) -> np.ndarray:
        rng = stream(self.seed, index, "start") if self.randomize else None
        return collar_start(self.domain, self.j, randomize=self.randomize, rng=rng)


# ---------------------------------------------------------------------------
# Absorption-time check at an intermediate scale
# ---------------------------------------------------------------------------

def absorbing_families(domain: TubeDomain, absorbing: Sequence[int]) -> list[SectionFamily]:
    """Collars of the frozen vertices, hit from the tube side."""
    families = []
    for j in absorbing:
        levels = {k: domain.collar_level(j) for k in domain.graph.incident(j)}
        families.append(SectionFamily(j, levels, inward=True))
    return families


def absorption_check(
    domain: TubeDomain,
    i: int,
    start: Sequence[float] | Callable[[int], np.ndarray],
    t: float,
    n: int,
    config: SimConfig,
    workers: int = 1,
) -> tuple[TestReport, dict[int, float]]:
    """
    Late-absorption probability and absorbing-collar hit law.

    The report's statistic is P(first absorbing-collar hit after t); the dict
    is the empirical law of which frozen vertex was reached first.
    """
    chain = intermediate_chain(domain.graph, domain.scaling, i)
    absorbing = sorted(chain.absorbing)
    records = trajectory_pool.section_hits(
        domain, start, absorbing_families(domain, absorbing), config, n, workers, horizon=t
    )
    hits = [r for r in records if r.status == EXITED]
    late = sum(1 for r in records if r.status == HORIZON)
    censored = n - len(hits) - late
    counted = len(hits) + late
    p_late = late / counted if counted else 1.0
    law = {j: (sum(1 for r in hits if r.exit_vertex == j) / len(hits) if hits else 0.0) for j in absorbing}
    rep = TestReport(
        name="late_absorption",
        statistic=p_late,
        threshold=LOCALIZATION_THRESHOLD,
        passed=p_late < LOCALIZATION_THRESHOLD,
        sample_size=counted,
        censored=censored,
        notes="hit law " + " ".join(f"O{j}={p:.4f}" for j, p in law.items()),
    )
    return rep, law
