from __future__ import annotations

import numpy as np
import pytest

from analytic_checks import (
    chain_oracle_check,
    projection_continuity_check,
    random_graph,
    random_scaling,
    row_sum_check,
    uniformization_check,
)
from graph_core import validate
from limit_models import timescale_ladder


def test_random_graph_is_valid():
    rng = np.random.default_rng(4)
    for n in (3, 5, 8):
        assert validate(random_graph(rng, n)).ok


def test_random_scaling_has_two_classes():
    rng = np.random.default_rng(4)
    for _ in range(20):
        assert timescale_ladder(random_scaling(rng, 6)).size >= 2


def test_row_sums():
    rep = row_sum_check(n_graphs=10, seed=3)
    assert rep.passed, rep.notes
    assert rep.sample_size == 10


def test_chain_oracle_small():
    rep = chain_oracle_check(n_graphs=3, walks=20_000, seed=5)
    assert rep.passed
    assert rep.threshold > 3.0
    assert rep.sample_size > 0


def test_uniformization():
    rep = uniformization_check()
    assert rep.passed
    assert rep.statistic < 1e-10


def test_projection_continuity():
    rep = projection_continuity_check(n_pairs=10)
    assert rep.passed
    assert rep.name == "analytic:projection"


@pytest.mark.slow
def test_chain_oracle_full():
    assert chain_oracle_check().passed
