"""
Shared fixtures. The tubesim scripts import each other by bare module name,
so their directory goes on sys.path before any test module is collected.
"""

from __future__ import annotations

from pathlib import Path
import sys

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO_ROOT / "scripts" / "tubesim"))
sys.path.insert(0, str(REPO_ROOT / "scripts" / "tubesim" / "plots"))

from graph_core import build_graph  # noqa: E402
from reflected_sde import SimConfig  # noqa: E402
from tube_geometry import ScalingLaw, build_domain  # noqa: E402

CONFIG_DIR = REPO_ROOT / "configs"


@pytest.fixture
def star():
    """Three-edge star at O1: lambda = (1, 2, 1), lengths (1.5, 1.5, 2.5)."""
    return build_graph(
        [
            (0.0, 0.0),
            (1.5, 0.0),
            (-0.75, 1.299038105676658),
            (-1.25, -2.165063509461097),
        ],
        [((1, 2), 1.0), ((1, 3), 2.0), ((1, 4), 1.0)],
    )


@pytest.fixture
def dumbbell():
    return build_graph([(0.0, 0.0), (2.0, 0.0)], [((1, 2), 1.0)])


@pytest.fixture
def path_graph():
    """O1 - O2 - O3 on the x axis, edge lengths 1 and 2."""
    return build_graph([(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)], [((1, 2), 1.0), ((2, 3), 1.0)])


@pytest.fixture
def wide_dumbbell(dumbbell):
    """Dumbbell at eps = 0.05 with a small ball at O1; cheap to simulate."""
    scaling = ScalingLaw((1.0, 1.0), (0.45, 0.3), 2)
    return build_domain(dumbbell, scaling, 0.05)


@pytest.fixture
def fast_sim():
    return SimConfig(step_coefficient=0.05, max_steps=400_000, seed=11)
