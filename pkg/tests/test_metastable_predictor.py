from __future__ import annotations

import math

import numpy as np
import pytest

from errors import GeometryError, SimulationError
from graph_core import GraphPoint
from metastable_predictor import (
    FIBER_SAMPLES,
    FiberStart,
    MonteCarloEstimate,
    absorbing_families,
    bump,
    constant,
    coordinate,
    fiber_sample,
    localization_check,
    mc_observable,
    minimal_vertex,
    pde_solution,
    predict_first_critical,
    predict_intermediate,
    report,
)
from reflected_sde import SimConfig
from tube_geometry import ScalingLaw, build_domain


@pytest.fixture
def path_scaling():
    return ScalingLaw((1.0, 1.0, 1.0), (0.3, 0.45, 0.3), 2)


# -- observables -------------------------------------------------------------

def test_bump_is_linear_along_edges(path_graph):
    f = bump(3, 2)
    assert f.name == "bump2"
    assert f(path_graph, GraphPoint.at_vertex(2)) == 1.0
    assert f(path_graph, GraphPoint.on_edge(1, 0.25)) == pytest.approx(0.25)
    assert f(path_graph, GraphPoint.on_edge(2, 0.5)) == pytest.approx(0.75)
    assert not f.is_constant


def test_constant_and_coordinate(path_graph):
    c = constant(3, 2.5)
    assert c.is_constant
    assert c(path_graph, GraphPoint.on_edge(2, 1.3)) == pytest.approx(2.5)
    x = coordinate(path_graph, 0)
    assert x(path_graph, GraphPoint.on_edge(2, 1.3)) == pytest.approx(2.3)


def test_observable_on_domain_uses_continuous_projection(wide_dumbbell):
    f = bump(2, 1)
    assert f.on_domain(wide_dumbbell, (0.05, 0.01)) == 1.0
    assert f.on_domain(wide_dumbbell, (1.0, 0.0)) == pytest.approx(0.5)


# -- reports -----------------------------------------------------------------

def test_report_tolerance_is_three_se_or_floor():
    mc = MonteCarloEstimate(0.7, 0.01, 1000, 0)
    rep = report("x", bump(2, 1), mc, 0.68)
    assert rep.tolerance == pytest.approx(0.03)
    assert rep.passed
    assert rep.discrepancy == pytest.approx(2.0)
    assert not report("x", bump(2, 1), mc, 0.6).passed
    assert report("x", bump(2, 1), mc, 0.66, floor=0.05).passed


def test_report_with_zero_se():
    exact = report("x", constant(2), MonteCarloEstimate(1.0, 0.0, 500, 0), 1.0)
    assert exact.passed
    assert exact.discrepancy == 0.0
    off = report("x", constant(2), MonteCarloEstimate(1.0, 0.0, 500, 0), 0.9)
    assert not off.passed
    assert math.isinf(off.discrepancy)


def test_report_invalid_when_heavily_censored():
    mc = MonteCarloEstimate(0.5, 0.01, 950, 50)
    assert mc.censoring_rate == pytest.approx(0.05)
    rep = report("x", bump(2, 1), mc, 0.5)
    assert rep.verdict == "invalid"
    assert not rep.passed


# -- predictions -------------------------------------------------------------

def test_predict_intermediate_path(path_graph, path_scaling):
    at_o2 = GraphPoint.at_vertex(2)
    assert predict_intermediate(path_graph, path_scaling, 1, at_o2, bump(3, 1)) == pytest.approx(2.0 / 3.0)
    assert predict_intermediate(path_graph, path_scaling, 1, at_o2, constant(3)) == pytest.approx(1.0)
    frozen = GraphPoint.at_vertex(3)
    assert predict_intermediate(path_graph, path_scaling, 1, frozen, bump(3, 3)) == pytest.approx(1.0)


def test_predict_first_critical_dumbbell(dumbbell):
    scaling = ScalingLaw((1.0, 1.0), (0.45, 0.3), 2)
    at_o1 = GraphPoint.at_vertex(1)
    for s in (0.5, 1.0, 2.0):
        value = predict_first_critical(dumbbell, scaling, None, at_o1, s, bump(2, 1))
        assert value == pytest.approx(math.exp(-s / math.pi), abs=1e-10)
    midpoint = GraphPoint.on_edge(1, 1.0)
    value = predict_first_critical(dumbbell, scaling, None, midpoint, 1.0, bump(2, 1))
    assert value == pytest.approx(0.5 * math.exp(-1.0 / math.pi), abs=1e-10)


def test_minimal_vertex(path_scaling):
    assert minimal_vertex(path_scaling) == 2
    with pytest.raises(GeometryError):
        minimal_vertex(ScalingLaw.uniform(3, 0.3, 2))


# -- starts and sections -----------------------------------------------------

def test_fiber_sample(wide_dumbbell):
    x = GraphPoint.on_edge(1, 1.0)
    points = fiber_sample(wide_dumbbell, x, seed=3)
    assert len(points) == FIBER_SAMPLES + 1
    np.testing.assert_allclose(points[0], [1.0, 0.0])
    assert all(wide_dumbbell.contains(p) for p in points)
    again = fiber_sample(wide_dumbbell, x, seed=3)
    np.testing.assert_array_equal(np.array(points), np.array(again))


def test_fiber_start_cycles(wide_dumbbell):
    x = GraphPoint.on_edge(1, 1.0)
    rule = FiberStart(wide_dumbbell, x, seed=3, randomize=True)
    np.testing.assert_array_equal(rule(0), rule(FIBER_SAMPLES + 1))
    axis_only = FiberStart(wide_dumbbell, x, seed=3, randomize=False)
    np.testing.assert_allclose(axis_only(5), [1.0, 0.0])


def test_absorbing_families_are_inward_collars(path_graph, path_scaling):
    domain = build_domain(path_graph, path_scaling, 0.01)
    families = absorbing_families(domain, [1, 3])
    assert [f.vertex for f in families] == [1, 3]
    assert all(f.inward for f in families)
    assert families[0].levels == {1: pytest.approx(domain.collar_level(1))}


# -- Monte Carlo -------------------------------------------------------------

def test_mc_observable_short_time_is_exact(wide_dumbbell):
    cfg = SimConfig(step_coefficient=0.05, max_steps=1000, seed=2)
    t = 5 * cfg.step_size(wide_dumbbell)
    mc = mc_observable(wide_dumbbell, (0.0, 0.0), t, bump(2, 1), 100, cfg)
    assert mc.estimate == 1.0
    assert mc.se == 0.0
    assert mc.n == 100
    assert mc.censored == 0
    assert mc.valid


def test_pde_solution_constant_data(wide_dumbbell):
    cfg = SimConfig(step_coefficient=0.05, max_steps=1000, seed=2)
    t = 5 * cfg.step_size(wide_dumbbell)
    start = FiberStart(wide_dumbbell, GraphPoint.on_edge(1, 1.0), seed=2, randomize=True)
    mc = pde_solution(wide_dumbbell, start, t, constant(2, 3.0), 100, cfg)
    assert mc.estimate == pytest.approx(3.0)


def test_mc_observable_requires_enough_trajectories(wide_dumbbell):
    with pytest.raises(ValueError):
        mc_observable(wide_dumbbell, (0.0, 0.0), 0.1, bump(2, 1), 10, SimConfig())


def test_mc_observable_all_censored(wide_dumbbell):
    cfg = SimConfig(step_coefficient=0.05, max_steps=1)
    with pytest.raises(SimulationError):
        mc_observable(wide_dumbbell, (0.0, 0.0), 1.0, bump(2, 1), 100, cfg)


@pytest.mark.slow
def test_localization_at_first_critical_scale(dumbbell):
    scaling = ScalingLaw((1.0, 1.0), (0.45, 0.3), 2)
    domain = build_domain(dumbbell, scaling, 0.05)
    cfg = SimConfig(step_coefficient=0.05, max_steps=2_000_000, seed=8)
    delta = 0.25 * (2.0 - domain.collar_level(2))
    rep = localization_check(domain, 1, 0.5, delta, 200, cfg)
    assert rep.sample_size + rep.censored == 200
    assert rep.passed
