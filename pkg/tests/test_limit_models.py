from __future__ import annotations

import math

import numpy as np
import pytest

from errors import GeometryError
from graph_core import GraphPoint, build_graph
from limit_models import (
    AbsorbingChain,
    absorption_distribution,
    alpha,
    ball_volume,
    ctmc_build,
    ctmc_law_at,
    ctmc_sample,
    exit_edge_probability,
    hitting_row,
    hitting_weight,
    inner_exit_probability,
    inner_exit_time,
    intermediate_chain,
    intermediate_time,
    kappa,
    law_frame,
    mean_exit_scale,
    mu_extended,
    one_cycle_escape_probability,
    sample_absorption,
    simulate_absorption,
    timescale_ladder,
)
from tube_geometry import ScalingLaw

STAR_LEVELS = {1: 1.0, 2: 1.0, 3: 2.0}


@pytest.fixture
def path_scaling():
    return ScalingLaw((1.0, 1.0, 1.0), (0.3, 0.45, 0.3), 2)


@pytest.fixture
def dumbbell_scaling():
    return ScalingLaw((1.0, 1.0), (0.45, 0.3), 2)


# -- single vertex -----------------------------------------------------------

def test_ball_volume():
    assert ball_volume(1) == 2.0
    assert ball_volume(2) == pytest.approx(math.pi)
    assert ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)
    assert ball_volume(4) == pytest.approx(math.pi ** 2 / 2.0)


def test_exit_edge_probability_star(star):
    p = exit_edge_probability(star, 1, STAR_LEVELS)
    assert p[1] == pytest.approx(1.0 / 3.5)
    assert p[2] == pytest.approx(2.0 / 3.5)
    assert p[3] == pytest.approx(0.5 / 3.5)
    assert sum(p.values()) == pytest.approx(1.0, abs=1e-12)


def test_exit_edge_probability_symmetric():
    graph = build_graph([(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0)], [((1, 2), 1.0), ((1, 3), 1.0)])
    p = exit_edge_probability(graph, 1, {1: 0.6, 2: 0.6})
    assert p == {1: pytest.approx(0.5), 2: pytest.approx(0.5)}


def test_exit_edge_probability_uses_cross_section_area_in_3d():
    graph = build_graph(
        [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)],
        [((1, 2), 1.0), ((1, 3), 2.0)],
    )
    p = exit_edge_probability(graph, 1, {1: 1.0, 2: 1.0})
    assert p[1] == pytest.approx(0.2)
    assert p[2] == pytest.approx(0.8)


def test_levels_must_cover_incident_edges(star):
    with pytest.raises(GeometryError):
        exit_edge_probability(star, 1, {1: 1.0, 2: 1.0})
    with pytest.raises(GeometryError):
        kappa(star, 1, {1: 1.0, 2: -1.0, 3: 1.0})


def test_inner_exit_probability(star):
    assert inner_exit_probability(star, 1) == {
        1: pytest.approx(0.25), 2: pytest.approx(0.5), 3: pytest.approx(0.25)
    }


def test_alpha_and_mean_exit_scale(star):
    eps = 0.02
    scaling = ScalingLaw.uniform(4, 0.4, 2)
    r = eps ** 0.4
    expected_alpha = r ** 2 * math.pi / (4.0 * eps * 2.0)
    assert alpha(star, scaling, eps, 1) == pytest.approx(expected_alpha)
    assert mean_exit_scale(star, scaling, 1, STAR_LEVELS, eps) == pytest.approx(
        expected_alpha * 4.0 / 3.5
    )
    assert inner_exit_time(star, scaling, eps, 1, 0.3) == pytest.approx(expected_alpha * 0.3)


def test_one_cycle_escape_probability(star):
    assert one_cycle_escape_probability(star, 1, STAR_LEVELS, 0.2) == pytest.approx(0.2 * 3.5 / 4.0)


def test_kappa_dumbbell(dumbbell):
    assert kappa(dumbbell, 1, {1: 2.0}) == pytest.approx(1.0 / math.pi)


def test_kappa_three_dimensional():
    graph = build_graph([(0.0, 0.0, 0.0), (0.0, 0.0, 2.0)], [((1, 2), 1.0)])
    assert kappa(graph, 1, {1: 2.0}) == pytest.approx(0.75 * 0.5)


# -- ladder ------------------------------------------------------------------

def test_timescale_ladder_orders_smallest_radius_first(path_scaling):
    ladder = timescale_ladder(path_scaling)
    assert ladder.size == 2
    assert ladder.group(1).members == (2,)
    assert ladder.group(2).members == (1, 3)
    assert ladder.class_of(3) == 2
    eps = 0.01
    assert ladder.timescale(1, eps) == pytest.approx(eps ** 0.9 / eps)
    assert ladder.timescale(2, eps) == pytest.approx(eps ** 0.6 / eps)
    assert intermediate_time(ladder, 1, eps) == pytest.approx(
        math.sqrt(eps ** -0.1 * eps ** -0.4)
    )
    with pytest.raises(ValueError):
        intermediate_time(ladder, 2, eps)


def test_ladder_representative_is_lowest_member():
    scaling = ScalingLaw((3.0, 2.0, 1.0), (0.3, 0.45, 0.3), 2)
    ladder = timescale_ladder(scaling)
    assert ladder.group(2).coefficient == 3.0


# -- intermediate chain ------------------------------------------------------

def test_intermediate_chain_path(path_graph, path_scaling):
    chain = intermediate_chain(path_graph, path_scaling, 1)
    assert chain.absorbing == frozenset({1, 3})
    np.testing.assert_allclose(chain.row(2), [2.0 / 3.0, 0.0, 1.0 / 3.0])
    np.testing.assert_allclose(chain.row(1), [1.0, 0.0, 0.0])

    dist = absorption_distribution(chain)
    np.testing.assert_allclose(dist.row(2), [2.0 / 3.0, 0.0, 1.0 / 3.0], atol=1e-12)
    np.testing.assert_allclose(dist.row(3), [0.0, 0.0, 1.0])
    np.testing.assert_allclose(dist.table.sum(axis=1), 1.0, atol=1e-12)
    frame = dist.to_frame()
    assert list(frame.columns) == ["O1", "O2", "O3"]
    assert frame.loc["O2", "O1"] == pytest.approx(2.0 / 3.0)


def test_intermediate_chain_index_range(path_graph, path_scaling):
    with pytest.raises(GeometryError):
        intermediate_chain(path_graph, path_scaling, 2)
    with pytest.raises(GeometryError):
        intermediate_chain(path_graph, ScalingLaw.uniform(3, 0.3, 2), 1)


def test_absorption_on_longer_path():
    graph = build_graph(
        [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)],
        [((1, 2), 1.0), ((2, 3), 1.0), ((3, 4), 1.0)],
    )
    scaling = ScalingLaw((1.0,) * 4, (0.3, 0.45, 0.45, 0.3), 2)
    dist = absorption_distribution(intermediate_chain(graph, scaling, 1))
    # symmetric random walk on 1..4 absorbed at the ends
    np.testing.assert_allclose(dist.row(2), [2.0 / 3.0, 0.0, 0.0, 1.0 / 3.0], atol=1e-12)
    np.testing.assert_allclose(dist.row(3), [1.0 / 3.0, 0.0, 0.0, 2.0 / 3.0], atol=1e-12)


@pytest.mark.filterwarnings("ignore")
def test_absorption_detects_trapped_states():
    transition = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    chain = AbsorbingChain(1, (1, 2, 3), transition, frozenset({3}))
    with pytest.raises(GeometryError, match="singular"):
        absorption_distribution(chain)


def test_simulated_absorption_matches_table(path_graph, path_scaling):
    chain = intermediate_chain(path_graph, path_scaling, 1)
    freq = simulate_absorption(chain, 2, 100_000, np.random.default_rng(0))
    np.testing.assert_allclose(freq, [2.0 / 3.0, 0.0, 1.0 / 3.0], atol=0.01)


def test_sample_absorption_lands_on_absorbing_vertex(path_graph, path_scaling):
    chain = intermediate_chain(path_graph, path_scaling, 1)
    rng = np.random.default_rng(1)
    assert {sample_absorption(chain, 2, rng) for _ in range(50)} <= {1, 3}
    assert sample_absorption(chain, 1, rng) == 1


def test_hitting_weight_is_linear(path_graph):
    x = GraphPoint.on_edge(2, 0.5)
    assert hitting_weight(path_graph, x, 2) == pytest.approx(0.75)
    assert hitting_weight(path_graph, x, 3) == pytest.approx(0.25)
    assert hitting_weight(path_graph, x, 1) == 0.0
    assert hitting_weight(path_graph, GraphPoint.at_vertex(1), 1) == 1.0


def test_mu_extended_on_edge(path_graph, path_scaling):
    dist = absorption_distribution(intermediate_chain(path_graph, path_scaling, 1))
    x = GraphPoint.on_edge(2, 1.0)
    np.testing.assert_allclose(hitting_row(path_graph, x), [0.0, 0.5, 0.5])
    np.testing.assert_allclose(mu_extended(dist, path_graph, x), [1.0 / 3.0, 0.0, 2.0 / 3.0])
    at_vertex = mu_extended(dist, path_graph, GraphPoint.at_vertex(2))
    np.testing.assert_allclose(at_vertex, dist.row(2))


# -- first critical scale ----------------------------------------------------

def test_ctmc_dumbbell_law(dumbbell, dumbbell_scaling):
    ctmc = ctmc_build(dumbbell, dumbbell_scaling)
    assert ctmc.minimal_vertex == 1
    assert ctmc.rates[0] == pytest.approx(1.0 / math.pi)
    assert ctmc.rates[1] == 0.0
    for s in (0.5, 1.0, 2.0):
        law = ctmc_law_at(ctmc, 1, s)
        assert law[0] == pytest.approx(math.exp(-s / math.pi), abs=1e-10)
        assert law.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(ctmc_law_at(ctmc, 2, 3.0), [0.0, 1.0])


def test_ctmc_law_at_zero_time(dumbbell, dumbbell_scaling):
    ctmc = ctmc_build(dumbbell, dumbbell_scaling)
    np.testing.assert_array_equal(ctmc_law_at(ctmc, 1, 0.0), [1.0, 0.0])
    with pytest.raises(ValueError):
        ctmc_law_at(ctmc, 1, -1.0)


def test_ctmc_generator_rows_sum_to_zero(star):
    scaling = ScalingLaw((1.0,) * 4, (0.45, 0.3, 0.3, 0.3), 2)
    ctmc = ctmc_build(star, scaling, STAR_LEVELS)
    np.testing.assert_allclose(ctmc.generator.sum(axis=1), 0.0, atol=1e-12)
    np.testing.assert_allclose(ctmc.jumps[0], [0.0, 1.0 / 3.5, 2.0 / 3.5, 0.5 / 3.5])


def test_ctmc_requires_unique_smallest_vertex(dumbbell):
    with pytest.raises(GeometryError, match="unique smallest"):
        ctmc_build(dumbbell, ScalingLaw.uniform(2, 0.3, 2))


def test_ctmc_sample_matches_law(dumbbell, dumbbell_scaling):
    ctmc = ctmc_build(dumbbell, dumbbell_scaling)
    rng = np.random.default_rng(5)
    draws = [ctmc_sample(ctmc, 1, 1.0, rng) for _ in range(20_000)]
    stay = draws.count(1) / len(draws)
    assert stay == pytest.approx(math.exp(-1.0 / math.pi), abs=0.015)
    assert ctmc_sample(ctmc, 2, 5.0, rng) == 2


def test_law_frame(dumbbell, dumbbell_scaling):
    frame = law_frame(ctmc_build(dumbbell, dumbbell_scaling), 1.0)
    assert frame.shape == (2, 2)
    np.testing.assert_allclose(frame.sum(axis=1), 1.0)
