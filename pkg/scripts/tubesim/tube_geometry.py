# -*- coding: utf-8 -*-

# tube_geometry.py

"""
Narrow tube domain G_eps built around a MetricGraph.

G_eps is the exact union of closed vertex balls B(O_j, r_j(eps)) and closed
edge cylinders of half-width lambda_k * eps around each edge segment. The
boundary is not smoothed near the ball/tube junctions; the reflection scheme
in reflected_sde copes with the resulting corners.

Responsibilities:
- Power-law vertex radii r_j(eps) = c_j * eps**beta_j (ScalingLaw).
- Feasibility checks at construction (build_domain).
- Membership, nearest projection Pi, continuous projection Pi^eps.
- Local coordinates (j, k, x_tilde, y_tilde) and boundary reflection data.
- Cross-section queries used as stopping sets by the simulator.

Public API:
    ScalingLaw(coefficients, exponents, dimension)
    build_domain(graph, scaling, epsilon)            -> TubeDomain
    nearest_projection(graph, z)                     -> GraphPoint
    TubeDomain.contains(z)                           -> bool
    TubeDomain.continuous_projection(z)              -> GraphPoint
    TubeDomain.local_coordinates(z)                  -> LocalCoordinate
    TubeDomain.boundary_reflect_data(z)              -> (point, inward normal)
    TubeDomain.section_coordinate(z, j)              -> (k, abscissa) | None
    collar_adjusted_levels(domain, j)                -> dict edge -> L^eps
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence
import logging

import numpy as np
from scipy.linalg import null_space

from errors import GeometryError
from graph_core import GraphPoint, MetricGraph

# ---------------------------------------------------------------------------
# Logging
# ---------------------------------------------------------------------------

logger = logging.getLogger("tubesim.tube_geometry")

# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

# Two candidates closer than this are treated as equidistant.
TIE_TOL: float = 1e-12

# Distance between the collar restart sections and the ball surface, in units
# of epsilon: C_{eps,j}(r_j + 3 eps).
COLLAR_OFFSET: float = 3.0

# Half-width of the affine band of Pi^eps, in units of epsilon.
PROJECTION_BAND: float = 2.0

# Feature priorities for the corner rule (lower wins a tie).
_SPHERE, _RIM, _CYLINDER = 0, 1, 2


# ---------------------------------------------------------------------------
# Scaling law
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingLaw:
    """Per-vertex radii r_j(eps) = c_j * eps**beta_j with 0 < beta_j < (d-1)/d."""
    coefficients: tuple[float, ...]
    exponents: tuple[float, ...]
    dimension: int

    def __post_init__(self) -> None:
        if len(self.coefficients) != len(self.exponents):
            raise GeometryError("scaling law needs one (c, beta) pair per vertex")
        bound = (self.dimension - 1) / self.dimension
        for j, (c, beta) in enumerate(zip(self.coefficients, self.exponents), start=1):
            if not c > 0.0:
                raise GeometryError(f"vertex {j}: coefficient c must be positive, got {c}")
            if not 0.0 < beta < bound:
                raise GeometryError(
                    f"vertex {j}: exponent beta={beta} violates the scaling assumption "
                    f"r_j(eps) >> eps^((d-1)/d), i.e. 0 < beta < {bound:.6g} for d={self.dimension}"
                )

    @classmethod
    def uniform(cls, n_vertices: int, beta: float, dimension: int, c: float = 1.0) -> "ScalingLaw":
        return cls((c,) * n_vertices, (beta,) * n_vertices, dimension)

    @property
    def n_vertices(self) -> int:
        return len(self.exponents)

    def radius(self, j: int, epsilon: float) -> float:
        return self.coefficients[j - 1] * epsilon ** self.exponents[j - 1]

    def radii(self, epsilon: float) -> np.ndarray:
        return np.array(self.coefficients) * epsilon ** np.array(self.exponents)


# ---------------------------------------------------------------------------
# Section types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalCoordinate:
    vertex: int
    edge: int
    x_tilde: float
    y_tilde: tuple[float, ...]


@dataclass(frozen=True)
class CrossSection:
    """Points whose projection lies on edge k at graph distance `level` from O_j."""
    vertex: int
    edge: int
    level: float


@dataclass(frozen=True)
class SectionFamily:
    """
    One cross-section per edge incident to `vertex`.

    `inward` selects the side the walker comes from: False means the walker
    starts near O_j and the section is hit when the abscissa reaches the level
    from below; True means it is hit from the far side (abscissa decreasing).
    """
    vertex: int
    levels: Mapping[int, float]
    inward: bool = False

    def sections(self) -> list[CrossSection]:
        return [CrossSection(self.vertex, k, lv) for k, lv in sorted(self.levels.items())]

    def check(self, graph: MetricGraph) -> None:
        incident = set(graph.incident(self.vertex))
        if set(self.levels) != incident:
            raise GeometryError(
                f"section family at vertex {self.vertex} must cover incident edges "
                f"{sorted(incident)} exactly once, got {sorted(self.levels)}"
            )
        for k, lv in self.levels.items():
            length = graph.edge(k).length
            if not 0.0 < lv < length:
                raise GeometryError(
                    f"section level {lv} on edge {k} outside (0, {length})"
                )

    def crossed(self, abscissa: float, k: int) -> bool:
        level = self.levels[k]
        return abscissa <= level if self.inward else abscissa >= level


# ---------------------------------------------------------------------------
# Nearest projection (defined on all of R^d)
# ---------------------------------------------------------------------------

def _edge_arrays(graph: MetricGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    starts = np.array([graph.vertex(e.low).point for e in graph.edges])
    dirs = np.array([graph.edge_direction(e.low, e.id) for e in graph.edges])
    lengths = np.array([e.length for e in graph.edges])
    return starts, dirs, lengths


def _project_onto_edges(
    z: np.ndarray, starts: np.ndarray, dirs: np.ndarray, lengths: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Clamped abscissa and distance to each edge segment."""
    rel = z - starts
    t = np.clip(np.einsum("ij,ij->i", rel, dirs), 0.0, lengths)
    foot = starts + t[:, None] * dirs
    dist = np.linalg.norm(z - foot, axis=1)
    return t, dist


def _pick_edge(dist: np.ndarray) -> int:
    """Index of the closest edge, least index on ties."""
    best = float(dist.min())
    return int(np.flatnonzero(dist <= best + TIE_TOL)[0])


def nearest_projection(graph: MetricGraph, z: Sequence[float]) -> GraphPoint:
    """Closest point of the graph to z; ties go to the least edge index."""
    starts, dirs, lengths = _edge_arrays(graph)
    t, dist = _project_onto_edges(np.asarray(z, dtype=float), starts, dirs, lengths)
    i = _pick_edge(dist)
    return GraphPoint.on_edge(i + 1, float(t[i]))


# ---------------------------------------------------------------------------
# Tube domain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TubeDomain:
    graph: MetricGraph
    scaling: ScalingLaw
    epsilon: float
    radii: np.ndarray = field(repr=False, compare=False)
    half_widths: np.ndarray = field(repr=False, compare=False)

    # -- cached geometry ---------------------------------------------------

    @cached_property
    def _edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return _edge_arrays(self.graph)

    @cached_property
    def _centers(self) -> np.ndarray:
        return self.graph.positions

    @cached_property
    def _frames(self) -> dict[tuple[int, int], np.ndarray]:
        """Orthonormal transverse frame n^l_{j,k} (rows) for every incident pair."""
        frames = {}
        for e in self.graph.edges:
            for j in e.endpoints:
                direction = self.graph.edge_direction(j, e.id)
                frames[(j, e.id)] = null_space(direction[None, :]).T
        return frames

    @property
    def dimension(self) -> int:
        return self.graph.dimension

    def radius(self, j: int) -> float:
        return float(self.radii[j - 1])

    def half_width(self, k: int) -> float:
        return float(self.half_widths[k - 1])

    @property
    def min_half_width(self) -> float:
        return float(self.half_widths.min())

    def collar_level(self, j: int) -> float:
        return self.radius(j) + COLLAR_OFFSET * self.epsilon

    # -- membership --------------------------------------------------------

    def contains(self, z: Sequence[float]) -> bool:
        z = np.asarray(z, dtype=float)
        d2 = np.einsum("ij,ij->i", self._centers - z, self._centers - z)
        if np.any(d2 <= self.radii ** 2):
            return True
        starts, dirs, lengths = self._edges
        rel = z - starts
        t = np.einsum("ij,ij->i", rel, dirs)
        perp2 = np.einsum("ij,ij->i", rel, rel) - t * t
        inside = (t >= 0.0) & (t <= lengths) & (perp2 <= self.half_widths ** 2)
        return bool(inside.any())

    # -- projections -------------------------------------------------------

    def nearest_projection(self, z: Sequence[float]) -> GraphPoint:
        starts, dirs, lengths = self._edges
        t, dist = _project_onto_edges(np.asarray(z, dtype=float), starts, dirs, lengths)
        i = _pick_edge(dist)
        return GraphPoint.on_edge(i + 1, float(t[i]))

    def smooth_projection(self, x: GraphPoint) -> GraphPoint:
        """Pi^eps applied to an already projected point x = Pi(z)."""
        if x.is_vertex:
            return x
        eps = self.epsilon
        band = PROJECTION_BAND * eps
        e = self.graph.edge(x.edge_id)
        for j in e.endpoints:
            d = self.graph.offset_from(x, j)
            r = self.radius(j)
            if d <= r - band:
                return GraphPoint.at_vertex(j)
            if d <= r + band:
                s = (r + band) / (4.0 * eps) * d - (r * r - band * band) / (4.0 * eps)
                s = min(max(s, 0.0), e.length)
                if s == 0.0:
                    return GraphPoint.at_vertex(j)
                arclength = s if j == e.low else e.length - s
                return GraphPoint.on_edge(e.id, arclength)
        return x

    def continuous_projection(self, z: Sequence[float]) -> GraphPoint:
        if not self.contains(z):
            raise GeometryError("continuous projection is only defined inside the domain")
        return self.smooth_projection(self.nearest_projection(z))

    # -- local coordinates -------------------------------------------------

    def frame(self, j: int, k: int) -> np.ndarray:
        return self._frames[(j, k)]

    def local_coordinates(self, z: Sequence[float]) -> LocalCoordinate:
        z = np.asarray(z, dtype=float)
        if not self.contains(z):
            raise GeometryError("local coordinates are only defined inside the domain")
        x = self.nearest_projection(z)
        e = self.graph.edge(x.edge_id)
        if x.arclength <= 0.0 or x.arclength >= e.length:
            raise GeometryError(
                "projection is a vertex; the transverse frame is ambiguous there"
            )
        from_low, from_high = x.arclength, e.length - x.arclength
        j = e.low if from_low <= from_high else e.high
        x_tilde = from_low if j == e.low else from_high
        axis_point = self.graph.vertex(j).point + x_tilde * self.graph.edge_direction(j, e.id)
        y_tilde = self.frame(j, e.id) @ (z - axis_point)
        return LocalCoordinate(j, e.id, float(x_tilde), tuple(float(v) for v in y_tilde))

    def from_local(self, coord: LocalCoordinate) -> np.ndarray:
        j, k = coord.vertex, coord.edge
        return (
            self.graph.vertex(j).point
            + coord.x_tilde * self.graph.edge_direction(j, k)
            + np.asarray(coord.y_tilde) @ self.frame(j, k)
        )

    # -- boundary ----------------------------------------------------------

    def _inside_open_cylinder(self, q: np.ndarray, slack: float) -> bool:
        starts, dirs, lengths = self._edges
        rel = q - starts
        t = np.einsum("ij,ij->i", rel, dirs)
        perp = np.sqrt(np.maximum(np.einsum("ij,ij->i", rel, rel) - t * t, 0.0))
        return bool(np.any((t > 0.0) & (t < lengths) & (perp < self.half_widths - slack)))

    def _inside_open_ball(self, q: np.ndarray, slack: float) -> bool:
        dist = np.linalg.norm(self._centers - q, axis=1)
        return bool(np.any(dist < self.radii - slack))

    def _transverse_unit(self, j: int, k: int, rel: np.ndarray) -> np.ndarray:
        direction = self.graph.edge_direction(j, k)
        perp = rel - (rel @ direction) * direction
        norm = np.linalg.norm(perp)
        if norm == 0.0:
            return self.frame(j, k)[0]
        return perp / norm

    def boundary_reflect_data(self, z: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
        """
        Nearest point of the union boundary and the inward unit normal there.

        Candidates are sphere caps (minus tube openings), cylinder walls (minus
        the parts inside balls) and the junction rims. Equidistant candidates
        are resolved sphere first, then rim, then cylinder.
        """
        z = np.asarray(z, dtype=float)
        slack = 1e-12 * max(self.min_half_width, 1.0)
        candidates: list[tuple[float, int, np.ndarray, np.ndarray]] = []

        for j in range(1, self.graph.n_vertices + 1):
            center = self.graph.vertex(j).point
            r = self.radius(j)
            rel = z - center
            norm = np.linalg.norm(rel)
            radial = rel / norm if norm > 0.0 else np.eye(self.dimension)[0]
            q = center + r * radial
            if not self._inside_open_cylinder(q, slack):
                candidates.append((float(np.linalg.norm(z - q)), _SPHERE, q, -radial))

            for k in self.graph.incident(j):
                w = self.half_width(k)
                direction = self.graph.edge_direction(j, k)
                along = np.sqrt(max(r * r - w * w, 0.0))
                u = self._transverse_unit(j, k, rel)
                q = center + along * direction + w * u
                # Rim: bisect the sphere and wall normals.
                n_rim = (center - q) / r - u
                candidates.append((float(np.linalg.norm(z - q)), _RIM, q, n_rim))

        starts, dirs, lengths = self._edges
        for e in self.graph.edges:
            i = e.id - 1
            rel = z - starts[i]
            t = float(np.clip(rel @ dirs[i], 0.0, lengths[i]))
            u = self._transverse_unit(e.low, e.id, rel)
            q = starts[i] + t * dirs[i] + self.half_width(e.id) * u
            if not self._inside_open_ball(q, slack):
                candidates.append((float(np.linalg.norm(z - q)), _CYLINDER, q, -u))

        best_dist = min(c[0] for c in candidates)
        near = [c for c in candidates if c[0] <= best_dist + TIE_TOL]
        _, _, point, normal = min(near, key=lambda c: (c[1], c[0]))
        return point, normal / np.linalg.norm(normal)

    # -- sections ----------------------------------------------------------

    def section_coordinate_of(self, x: GraphPoint, j: int) -> tuple[int, float] | None:
        """(edge, graph distance from O_j) for a projected point x, None off the star of j."""
        if x.is_vertex:
            return None
        offset = self.graph.offset_from(x, j)
        if offset is None:
            return None
        return x.edge_id, offset

    def section_coordinate(self, z: Sequence[float], j: int) -> tuple[int, float] | None:
        return self.section_coordinate_of(self.nearest_projection(z), j)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def build_domain(graph: MetricGraph, scaling: ScalingLaw, epsilon: float) -> TubeDomain:
    """Instantiate G_eps, rejecting infeasible geometry."""
    if not epsilon > 0.0:
        raise GeometryError(f"epsilon must be positive, got {epsilon}")
    if scaling.n_vertices != graph.n_vertices:
        raise GeometryError(
            f"scaling law covers {scaling.n_vertices} vertices, graph has {graph.n_vertices}"
        )
    if scaling.dimension != graph.dimension:
        raise GeometryError(
            f"scaling law is for d={scaling.dimension}, graph lives in d={graph.dimension}"
        )

    radii = scaling.radii(epsilon)
    half_widths = np.array([e.lam * epsilon for e in graph.edges])

    for e in graph.edges:
        w = half_widths[e.id - 1]
        r_lo, r_hi = radii[e.low - 1], radii[e.high - 1]
        for j, r in ((e.low, r_lo), (e.high, r_hi)):
            if w >= r:
                raise GeometryError(
                    f"edge {e.id}: tube half-width {w:.6g} is not below the radius "
                    f"{r:.6g} of vertex {j} (eps={epsilon})"
                )
        # Balls may not meet, and both collar sections must fit on the edge.
        gap = max(2.0 * w, 2.0 * COLLAR_OFFSET * epsilon)
        if r_lo + r_hi + gap >= e.length:
            raise GeometryError(
                f"edge {e.id}: balls of radii {r_lo:.6g} and {r_hi:.6g} overlap along "
                f"the edge of length {e.length:.6g} (eps={epsilon})"
            )

    domain = TubeDomain(
        graph=graph,
        scaling=scaling,
        epsilon=float(epsilon),
        radii=radii,
        half_widths=half_widths,
    )
    logger.info(
        "Built tube domain: eps=%.4g, radii=%s, half-widths=%s",
        epsilon,
        np.array2string(radii, precision=4),
        np.array2string(half_widths, precision=4),
    )
    return domain


def collar_adjusted_levels(domain: TubeDomain, j: int) -> dict[int, float]:
    """L^eps_{j,k} = |I_k| - (r_{j'}(eps) + 3 eps) for every edge k at O_j."""
    graph = domain.graph
    return {
        k: graph.edge(k).length - domain.collar_level(graph.neighbor(j, k))
        for k in graph.incident(j)
    }


def collar_family(domain: TubeDomain, j: int, inward: bool = False) -> SectionFamily:
    """The restart surface C_{eps,j}(r_j + 3 eps) as a section family."""
    level = domain.collar_level(j)
    return SectionFamily(j, {k: level for k in domain.graph.incident(j)}, inward=inward)


def uniform_family(domain: TubeDomain, j: int, level: float) -> SectionFamily:
    return SectionFamily(j, {k: level for k in domain.graph.incident(j)})
