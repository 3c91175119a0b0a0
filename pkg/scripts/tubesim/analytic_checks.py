# -*- coding: utf-8 -*-

# analytic_checks.py
"""
Simulation-free self checks of the limit layer.

    row sums        every probability row on random graphs sums to 1
    chain oracle    absorption tables vs vectorized chain walks
    uniformization  CTMC laws vs the one-jump closed forms
    projection      Pi^eps is continuous at both ends of its affine band

Each check returns a TestReport; run_all() returns them in that order.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.stats import norm

from exit_statistics import TestReport
from graph_core import GraphPoint, MetricGraph, build_graph
from limit_models import (
    absorption_distribution,
    ctmc_build,
    ctmc_law_at,
    exit_edge_probability,
    inner_exit_probability,
    intermediate_chain,
    kappa,
    simulate_absorption,
    timescale_ladder,
)
from tube_geometry import PROJECTION_BAND, ScalingLaw, build_domain

logger = logging.getLogger("tubesim.analytic_checks")

ROW_TOL: float = 1e-12
CLOSED_FORM_TOL: float = 1e-10
CONTINUITY_TOL: float = 1e-10

ORACLE_GRAPHS: int = 20
ORACLE_WALKS: int = 1_000_000
ORACLE_SIGMA: float = 3.0

EXPONENT_CHOICES = (0.2, 0.3, 0.4, 0.45)


# ---------------------------------------------------------------------------
# Random graphs
# ---------------------------------------------------------------------------

def random_graph(rng: np.random.Generator, n_vertices: int) -> MetricGraph:
    """Random connected planar-embedded graph: a random tree plus a few chords."""
    positions = rng.uniform(0.0, 10.0, size=(n_vertices, 2))
    pairs = {tuple(sorted((j, int(rng.integers(1, j))))) for j in range(2, n_vertices + 1)}
    for _ in range(int(rng.integers(0, n_vertices))):
        a, b = rng.choice(np.arange(1, n_vertices + 1), size=2, replace=False)
        pairs.add((int(min(a, b)), int(max(a, b))))
    specs = [(pair, float(rng.uniform(0.5, 2.0))) for pair in sorted(pairs)]
    return build_graph(positions.tolist(), specs)


def random_scaling(rng: np.random.Generator, n_vertices: int, classes: int = 2) -> ScalingLaw:
    """At least `classes` distinct exponents, every vertex drawing one of them."""
    chosen = rng.choice(EXPONENT_CHOICES, size=classes, replace=False)
    exps = list(chosen) + list(rng.choice(chosen, size=n_vertices - classes))
    rng.shuffle(exps)
    return ScalingLaw((1.0,) * n_vertices, tuple(float(b) for b in exps), 2)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def row_sum_check(n_graphs: int = 100, seed: int = 0) -> TestReport:
    rng = np.random.default_rng(seed)
    worst = 0.0
    negative = 0
    for _ in range(n_graphs):
        n = int(rng.integers(3, 9))
        graph = random_graph(rng, n)
        scaling = random_scaling(rng, n)
        rows: list[np.ndarray] = []
        for j in range(1, n + 1):
            levels = {k: float(rng.uniform(0.1, 1.0)) for k in graph.incident(j)}
            rows.append(np.array(list(exit_edge_probability(graph, j, levels).values())))
            rows.append(np.array(list(inner_exit_probability(graph, j).values())))
        ladder = timescale_ladder(scaling)
        for i in range(1, ladder.size):
            chain = intermediate_chain(graph, scaling, i)
            rows.extend(chain.transition)
            rows.extend(absorption_distribution(chain).table)
        if len(ladder.group(1).members) == 1:
            ctmc = ctmc_build(graph, scaling)
            rows.extend(ctmc.jumps)
            rows.extend(ctmc_law_at(ctmc, j, 1.0) for j in range(1, n + 1))
        for row in rows:
            worst = max(worst, abs(float(np.sum(row)) - 1.0))
            negative += int(np.any(np.asarray(row) < -ROW_TOL))
    return TestReport(
        name="analytic:row_sums",
        statistic=worst,
        threshold=ROW_TOL,
        passed=worst <= ROW_TOL and negative == 0,
        sample_size=n_graphs,
        notes=f"negative rows={negative}",
    )


def chain_oracle_check(
    n_graphs: int = ORACLE_GRAPHS,
    walks: int = ORACLE_WALKS,
    seed: int = 1,
) -> TestReport:
    """
    Absorption tables against simulated walks.

    Every (graph, transient start, absorbing target) cell is one comparison;
    the 3-sigma band is widened to the same family-wise level across them.
    """
    rng = np.random.default_rng(seed)
    zs: list[float] = []
    for _ in range(n_graphs):
        n = int(rng.integers(3, 9))
        graph = random_graph(rng, n)
        chain = intermediate_chain(graph, random_scaling(rng, n), 1)
        dist = absorption_distribution(chain)
        for j in chain.vertices:
            if j in chain.absorbing:
                continue
            freq = simulate_absorption(chain, j, walks, rng)
            for target in sorted(chain.absorbing):
                p = dist.row(j)[target - 1]
                se = math.sqrt(max(p * (1.0 - p), 1e-300) / walks)
                zs.append(abs(freq[target - 1] - p) / se)
    level = 2.0 * norm.sf(ORACLE_SIGMA)
    threshold = float(norm.isf(level / 2.0 / max(len(zs), 1)))
    worst = max(zs) if zs else 0.0
    return TestReport(
        name="analytic:chain_oracle",
        statistic=worst,
        threshold=threshold,
        passed=worst <= threshold,
        sample_size=len(zs),
        notes=f"{n_graphs} graphs, {walks} walks per start",
    )


def uniformization_check(s_values=(0.1, 0.5, 1.0, 2.0, 5.0)) -> TestReport:
    """Dumbbell and star laws against e^{-kappa s} and (1 - e^{-kappa s}) p_k."""
    worst = 0.0
    dumbbell = build_graph([(0.0, 0.0), (2.0, 0.0)], [((1, 2), 1.0)])
    d_scaling = ScalingLaw((1.0, 1.0), (0.45, 0.3), 2)
    star = build_graph(
        [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-2.0, 0.0)],
        [((1, 2), 1.0), ((1, 3), 2.0), ((1, 4), 1.0)],
    )
    s_scaling = ScalingLaw((1.0,) * 4, (0.45, 0.3, 0.3, 0.3), 2)
    for graph, scaling in ((dumbbell, d_scaling), (star, s_scaling)):
        ctmc = ctmc_build(graph, scaling)
        j1 = ctmc.minimal_vertex
        levels = {k: graph.edge(k).length for k in graph.incident(j1)}
        rate = kappa(graph, j1, levels)
        p = exit_edge_probability(graph, j1, levels)
        for s in s_values:
            law = ctmc_law_at(ctmc, j1, s)
            stay = math.exp(-rate * s)
            expected = np.zeros(graph.n_vertices)
            expected[j1 - 1] = stay
            for k, pk in p.items():
                expected[graph.neighbor(j1, k) - 1] += (1.0 - stay) * pk
            worst = max(worst, float(np.max(np.abs(law - expected))))
    return TestReport(
        name="analytic:uniformization",
        statistic=worst,
        threshold=CLOSED_FORM_TOL,
        passed=worst <= CLOSED_FORM_TOL,
        sample_size=2 * len(s_values),
    )


def projection_continuity_check(n_pairs: int = 50, seed: int = 2) -> TestReport:
    """Pi^eps just inside and outside d = r - 2 eps and d = r + 2 eps."""
    rng = np.random.default_rng(seed)
    graph = build_graph([(0.0, 0.0), (10.0, 0.0)], [((1, 2), 1.0)])
    worst = 0.0
    eta = 1e-14
    for _ in range(n_pairs):
        eps = float(rng.uniform(0.002, 0.05))
        beta = 0.3
        r = float(rng.uniform(max(4.0 * eps, 0.05), 1.0))
        c = r / eps ** beta
        domain = build_domain(graph, ScalingLaw((c, c), (beta, beta), 2), eps)
        band = PROJECTION_BAND * eps
        for d, expected in ((r - band, 0.0), (r + band, r + band)):
            for side in (-eta, eta):
                x = domain.smooth_projection(GraphPoint.on_edge(1, d + side))
                got = graph.distance(x, GraphPoint.at_vertex(1))
                worst = max(worst, abs(got - expected))
    return TestReport(
        name="analytic:projection",
        statistic=worst,
        threshold=CONTINUITY_TOL,
        passed=worst <= CONTINUITY_TOL,
        sample_size=n_pairs,
    )


def run_all(seed: int = 0, walks: int = ORACLE_WALKS) -> list[TestReport]:
    reports = [
        row_sum_check(seed=seed),
        chain_oracle_check(walks=walks, seed=seed + 1),
        uniformization_check(),
        projection_continuity_check(seed=seed + 2),
    ]
    for rep in reports:
        logger.info("%s: %.3g (threshold %.3g) %s", rep.name, rep.statistic, rep.threshold, rep.verdict)
    return reports
