# -*- coding: utf-8 -*-

# limit_models.py

"""
Closed-form small-epsilon limits for the narrow tube diffusion.

Everything here is deterministic and cheap; the simulator is checked against
these numbers.

Exit from one vertex ball through sections at distances L_k along its edges:

    p_k(L)        = (lambda_k^(d-1) / L_k) / sum_l (lambda_l^(d-1) / L_l)
    alpha(eps)    = r^d V_d / (sum_k lambda_k^(d-1) eps^(d-1) V_{d-1})
    mean exit     = alpha(eps) * sum_l lambda_l^(d-1) / sum_k (lambda_k^(d-1) / L_k)
    kappa(L)      = V_{d-1} * sum_k (lambda_k^(d-1) / L_k) / V_d

V_d is the volume of the unit d-ball. Radii are grouped into order classes by
their exponent beta (larger beta, smaller radius) to form the timescale ladder
T^i = r_(i)^d / eps^(d-1). At an intermediate scale the vertices of larger
classes freeze and the rest jump as a discrete chain; at the first critical
scale the unique smallest vertex empties at rate kappa.

Public API:
    ball_volume(d)
    exit_edge_probability(graph, j, levels)
    inner_exit_probability(graph, j)
    alpha(graph, scaling, epsilon, j)
    inner_exit_time(graph, scaling, epsilon, j, delta)
    mean_exit_scale(graph, scaling, j, levels, epsilon)
    one_cycle_escape_probability(graph, j, levels, delta)
    kappa(graph, j, levels)
    timescale_ladder(scaling)
    intermediate_time(ladder, i, epsilon)
    intermediate_chain(graph, scaling, i)
    absorption_distribution(chain)
    sample_absorption(chain, start, rng)
    hitting_weight(graph, x, j)
    mu_extended(dist, graph, x)
    ctmc_build(graph, scaling, levels=None)
    ctmc_law_at(ctmc, start, s)
    ctmc_sample(ctmc, start, s, rng)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping
import logging
import math

import numpy as np
import pandas as pd
from scipy.linalg import lu_factor, lu_solve
from scipy.special import gamma
from scipy.stats import poisson

from errors import GeometryError
from graph_core import GraphPoint, MetricGraph
from tube_geometry import ScalingLaw

# ---------------------------------------------------------------------------
# Logging
# ---------------------------------------------------------------------------

logger = logging.getLogger("tubesim.limit_models")

# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

# Exponents closer than this belong to the same radius order class.
EXPONENT_TOL: float = 1e-12

# Poisson tail left out of the uniformization sum.
UNIFORMIZATION_TAIL: float = 1e-13

# Pivot magnitude below which (I - Q) is treated as singular.
PIVOT_TOL: float = 1e-14

# Cap on jumps in one absorbing-chain walk.
MAX_CHAIN_STEPS: int = 1_000_000


# ---------------------------------------------------------------------------
# Constants and single-vertex limits
# ---------------------------------------------------------------------------

BALL_VOLUMES = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}


def ball_volume(d: int) -> float:
    """Volume of the unit ball in R^d."""
    if d in BALL_VOLUMES:
        return BALL_VOLUMES[d]
    return math.pi ** (d / 2.0) / float(gamma(d / 2.0 + 1.0))


def _weights(graph: MetricGraph, j: int) -> dict[int, float]:
    d = graph.dimension
    incident = graph.incident(j)
    if not incident:
        raise GeometryError(f"vertex {j} has no incident edges")
    return {k: graph.edge(k).lam ** (d - 1) for k in incident}


def _check_levels(graph: MetricGraph, j: int, levels: Mapping[int, float]) -> None:
    if set(levels) != set(graph.incident(j)):
        raise GeometryError(
            f"levels at vertex {j} must cover incident edges {list(graph.incident(j))}, "
            f"got {sorted(levels)}"
        )
    for k, lv in levels.items():
        if not lv > 0.0:
            raise GeometryError(f"level on edge {k} must be positive, got {lv}")


def edge_length_levels(graph: MetricGraph, j: int) -> dict[int, float]:
    return {k: graph.edge(k).length for k in graph.incident(j)}


def exit_edge_probability(
    graph: MetricGraph, j: int, levels: Mapping[int, float]
) -> dict[int, float]:
    """Limiting law of the exit edge through sections at distances `levels`."""
    _check_levels(graph, j, levels)
    w = _weights(graph, j)
    raw = {k: w[k] / levels[k] for k in w}
    total = sum(raw.values())
    return {k: v / total for k, v in raw.items()}


def inner_exit_probability(graph: MetricGraph, j: int) -> dict[int, float]:
    """Law of the first inner section edge hit from the collar: lambda^(d-1) weights."""
    w = _weights(graph, j)
    total = sum(w.values())
    return {k: v / total for k, v in w.items()}


def alpha(graph: MetricGraph, scaling: ScalingLaw, epsilon: float, j: int) -> float:
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    d = graph.dimension
    r = scaling.radius(j, epsilon)
    tube = sum(_weights(graph, j).values()) * epsilon ** (d - 1) * ball_volume(d - 1)
    return r ** d * ball_volume(d) / tube


def inner_exit_time(
    graph: MetricGraph, scaling: ScalingLaw, epsilon: float, j: int, delta: float
) -> float:
    """Mean time to reach the inner section C(delta) from the collar: alpha * delta."""
    return alpha(graph, scaling, epsilon, j) * delta


def mean_exit_scale(
    graph: MetricGraph,
    scaling: ScalingLaw,
    j: int,
    levels: Mapping[int, float],
    epsilon: float,
) -> float:
    _check_levels(graph, j, levels)
    w = _weights(graph, j)
    return alpha(graph, scaling, epsilon, j) * sum(w.values()) / sum(
        w[k] / levels[k] for k in w
    )


def one_cycle_escape_probability(
    graph: MetricGraph, j: int, levels: Mapping[int, float], delta: float
) -> float:
    """Chance that one excursion to C(delta) ends at the exit sections."""
    _check_levels(graph, j, levels)
    w = _weights(graph, j)
    return delta * sum(w[k] / levels[k] for k in w) / sum(w.values())


def kappa(graph: MetricGraph, j: int, levels: Mapping[int, float]) -> float:
    _check_levels(graph, j, levels)
    d = graph.dimension
    w = _weights(graph, j)
    return ball_volume(d - 1) * sum(w[k] / levels[k] for k in w) / ball_volume(d)


# ---------------------------------------------------------------------------
# Timescale ladder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LadderGroup:
    exponent: float
    members: tuple[int, ...]
    coefficient: float


@dataclass(frozen=True)
class TimescaleLadder:
    """Radius order classes, smallest radius first."""
    groups: tuple[LadderGroup, ...]
    dimension: int

    @property
    def size(self) -> int:
        return len(self.groups)

    def group(self, i: int) -> LadderGroup:
        if not 1 <= i <= len(self.groups):
            raise ValueError(f"ladder index {i} outside 1..{len(self.groups)}")
        return self.groups[i - 1]

    def radius(self, i: int, epsilon: float) -> float:
        g = self.group(i)
        return g.coefficient * epsilon ** g.exponent

    def timescale(self, i: int, epsilon: float) -> float:
        """T^i = r_(i)^d / eps^(d-1)."""
        d = self.dimension
        return self.radius(i, epsilon) ** d / epsilon ** (d - 1)

    def class_of(self, j: int) -> int:
        for i, g in enumerate(self.groups, start=1):
            if j in g.members:
                return i
        raise ValueError(f"vertex {j} not on the ladder")


def timescale_ladder(scaling: ScalingLaw) -> TimescaleLadder:
    """
    Group vertices by exponent and sort by decreasing exponent.

    The representative radius of a class uses the coefficient of its
    lowest-numbered member.
    """
    order = sorted(range(1, scaling.n_vertices + 1), key=lambda j: (-scaling.exponents[j - 1], j))
    groups: list[list[int]] = []
    for j in order:
        if groups and abs(scaling.exponents[groups[-1][0] - 1] - scaling.exponents[j - 1]) <= EXPONENT_TOL:
            groups[-1].append(j)
        else:
            groups.append([j])
    ladder = TimescaleLadder(
        groups=tuple(
            LadderGroup(
                exponent=scaling.exponents[g[0] - 1],
                members=tuple(sorted(g)),
                coefficient=scaling.coefficients[min(g) - 1],
            )
            for g in groups
        ),
        dimension=scaling.dimension,
    )
    logger.debug(
        "Timescale ladder: %s",
        [(g.exponent, g.members) for g in ladder.groups],
    )
    return ladder


def intermediate_time(ladder: TimescaleLadder, i: int, epsilon: float) -> float:
    """Geometric mean sqrt(T^i T^(i+1)) between two consecutive scales."""
    if not 1 <= i < ladder.size:
        raise ValueError(f"intermediate scale needs 1 <= i <= {ladder.size - 1}, got {i}")
    return math.sqrt(ladder.timescale(i, epsilon) * ladder.timescale(i + 1, epsilon))


# ---------------------------------------------------------------------------
# Intermediate-scale absorbing chain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AbsorbingChain:
    index: int
    vertices: tuple[int, ...]
    transition: np.ndarray
    absorbing: frozenset[int]

    def row(self, j: int) -> np.ndarray:
        return self.transition[j - 1]


@dataclass(frozen=True)
class AbsorptionDistribution:
    vertices: tuple[int, ...]
    table: np.ndarray

    def row(self, j: int) -> np.ndarray:
        return self.table[j - 1]

    def to_frame(self) -> pd.DataFrame:
        names = [f"O{j}" for j in self.vertices]
        return pd.DataFrame(self.table, index=pd.Index(names, name="source"), columns=names)


def jump_matrix(graph: MetricGraph, levels_for) -> np.ndarray:
    """Row j: p_{j,k}(L_j) placed on the far endpoint of each incident edge."""
    n = graph.n_vertices
    table = np.zeros((n, n))
    for j in range(1, n + 1):
        for k, p in exit_edge_probability(graph, j, levels_for(j)).items():
            table[j - 1, graph.neighbor(j, k) - 1] += p
    return table


def intermediate_chain(graph: MetricGraph, scaling: ScalingLaw, i: int) -> AbsorbingChain:
    ladder = timescale_ladder(scaling)
    if not 1 <= i <= ladder.size - 1:
        raise GeometryError(
            f"intermediate chain index must lie in 1..{ladder.size - 1}, got {i}"
        )
    cutoff = ladder.group(i).exponent
    absorbing = frozenset(
        j for j in range(1, graph.n_vertices + 1)
        if scaling.exponents[j - 1] < cutoff - EXPONENT_TOL
    )
    if not absorbing:
        raise GeometryError(f"chain {i} has no absorbing state")

    moves = jump_matrix(graph, lambda j: edge_length_levels(graph, j))
    transition = np.zeros_like(moves)
    for j in range(1, graph.n_vertices + 1):
        if j in absorbing:
            transition[j - 1, j - 1] = 1.0
        else:
            transition[j - 1] = moves[j - 1]
    return AbsorbingChain(
        index=i,
        vertices=tuple(range(1, graph.n_vertices + 1)),
        transition=transition,
        absorbing=absorbing,
    )


def absorption_distribution(chain: AbsorbingChain) -> AbsorptionDistribution:
    """mu = (I - Q)^-1 R, by LU with partial pivoting."""
    n = len(chain.vertices)
    absorbing = sorted(chain.absorbing)
    transient = [j for j in chain.vertices if j not in chain.absorbing]
    table = np.zeros((n, n))
    for j in absorbing:
        table[j - 1, j - 1] = 1.0

    if transient:
        t_idx = [j - 1 for j in transient]
        a_idx = [j - 1 for j in absorbing]
        q = chain.transition[np.ix_(t_idx, t_idx)]
        r = chain.transition[np.ix_(t_idx, a_idx)]
        lu, piv = lu_factor(np.eye(len(t_idx)) - q, check_finite=True)
        if np.min(np.abs(np.diag(lu))) < PIVOT_TOL:
            raise GeometryError(
                "I - Q is singular: some transient vertex cannot reach an absorbing one"
            )
        mu = lu_solve((lu, piv), r)
        for row, j in enumerate(transient):
            table[j - 1, a_idx] = mu[row]
    return AbsorptionDistribution(vertices=chain.vertices, table=table)


def sample_absorption(chain: AbsorbingChain, start: int, rng: np.random.Generator) -> int:
    """Run the chain from `start` until it sits in an absorbing vertex."""
    j = start
    for _ in range(MAX_CHAIN_STEPS):
        if j in chain.absorbing:
            return j
        j = int(rng.choice(len(chain.vertices), p=chain.row(j))) + 1
    raise GeometryError(f"chain walk from {start} did not absorb in {MAX_CHAIN_STEPS} jumps")


def simulate_absorption(
    chain: AbsorbingChain, start: int, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Absorption frequencies of n simultaneous chain walks from `start`."""
    cum = np.cumsum(chain.transition, axis=1)
    cum[:, -1] = 1.0
    absorbing = np.zeros(len(chain.vertices), dtype=bool)
    absorbing[[j - 1 for j in chain.absorbing]] = True
    state = np.full(n, start - 1)
    for _ in range(MAX_CHAIN_STEPS):
        moving = ~absorbing[state]
        if not moving.any():
            break
        u = rng.random(int(moving.sum()))
        state[moving] = (u[:, None] >= cum[state[moving]]).sum(axis=1)
    else:
        raise GeometryError(f"chain walks from {start} did not absorb in {MAX_CHAIN_STEPS} jumps")
    return np.bincount(state, minlength=len(chain.vertices)) / n


# ---------------------------------------------------------------------------
# Graph-point extension
# ---------------------------------------------------------------------------

def hitting_weight(graph: MetricGraph, x: GraphPoint, j: int) -> float:
    """Chance that 1-D Brownian motion from x hits O_j before the other endpoint."""
    graph.check_point(x)
    if x.is_vertex:
        return 1.0 if x.vertex_id == j else 0.0
    e = graph.edge(x.edge_id)
    if not e.touches(j):
        return 0.0
    far = graph.offset_from(x, e.other(j))
    return far / e.length


def hitting_row(graph: MetricGraph, x: GraphPoint) -> np.ndarray:
    row = np.zeros(graph.n_vertices)
    if x.is_vertex:
        row[x.vertex_id - 1] = 1.0
        return row
    e = graph.edge(x.edge_id)
    for j in e.endpoints:
        row[j - 1] += hitting_weight(graph, x, j)
    return row


def mu_extended(dist: AbsorptionDistribution, graph: MetricGraph, x: GraphPoint) -> np.ndarray:
    """mu(x, .) = sum_j p(x, O_j) mu(O_j, .)."""
    return hitting_row(graph, x) @ dist.table


# ---------------------------------------------------------------------------
# First critical scale chain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VertexCTMC:
    vertices: tuple[int, ...]
    rates: np.ndarray
    jumps: np.ndarray
    minimal_vertex: int

    @property
    def generator(self) -> np.ndarray:
        return self.rates[:, None] * (self.jumps - np.eye(len(self.vertices)))


def ctmc_build(
    graph: MetricGraph,
    scaling: ScalingLaw,
    levels: Mapping[int, float] | None = None,
) -> VertexCTMC:
    """
    Y(t): rate kappa_{j1}(L) at the unique smallest vertex j1, 0 elsewhere.

    `levels` are the exit distances at j1 (edge lengths when omitted).
    """
    ladder = timescale_ladder(scaling)
    first = ladder.group(1)
    if len(first.members) != 1:
        raise GeometryError(
            f"first critical scale needs a unique smallest vertex, got {list(first.members)}; "
            "several minimal vertices are not supported"
        )
    j1 = first.members[0]
    if levels is None:
        levels = edge_length_levels(graph, j1)
    rate = kappa(graph, j1, levels)

    def levels_for(j: int) -> Mapping[int, float]:
        return levels if j == j1 else edge_length_levels(graph, j)

    rates = np.zeros(graph.n_vertices)
    rates[j1 - 1] = rate
    return VertexCTMC(
        vertices=tuple(range(1, graph.n_vertices + 1)),
        rates=rates,
        jumps=jump_matrix(graph, levels_for),
        minimal_vertex=j1,
    )


def ctmc_law_at(ctmc: VertexCTMC, start: int, s: float) -> np.ndarray:
    """Law of Y(s) from `start` by uniformization."""
    if s < 0.0:
        raise ValueError(f"time must be nonnegative, got {s}")
    n = len(ctmc.vertices)
    row = np.zeros(n)
    row[start - 1] = 1.0
    rate = float(ctmc.rates.max())
    if s == 0.0 or rate == 0.0:
        return row

    step = np.eye(n) + ctmc.generator / rate
    mean = rate * s
    n_terms = int(poisson.isf(UNIFORMIZATION_TAIL, mean)) + 2
    weights = poisson.pmf(np.arange(n_terms), mean)
    law = np.zeros(n)
    for w in weights:
        law += w * row
        row = row @ step
    return law / law.sum()


def ctmc_sample(ctmc: VertexCTMC, start: int, s: float, rng: np.random.Generator) -> int:
    """Exact draw of Y(s): exponential holding times and categorical jumps."""
    if s < 0.0:
        raise ValueError(f"time must be nonnegative, got {s}")
    j, clock = start, 0.0
    while True:
        rate = ctmc.rates[j - 1]
        if rate == 0.0:
            return j
        clock += rng.exponential(1.0 / rate)
        if clock > s:
            return j
        j = int(rng.choice(len(ctmc.vertices), p=ctmc.jumps[j - 1])) + 1


def law_frame(ctmc: VertexCTMC, s: float) -> pd.DataFrame:
    """Law of Y(s) from every start, as a source x target table."""
    names = [f"O{j}" for j in ctmc.vertices]
    table = np.array([ctmc_law_at(ctmc, j, s) for j in ctmc.vertices])
    return pd.DataFrame(table, index=pd.Index(names, name="source"), columns=names)
