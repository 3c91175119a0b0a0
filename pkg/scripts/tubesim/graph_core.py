# graph_core.py

"""
Metric graph skeleton of the narrow tube domain.

The graph is finite, simple and connected, embedded in R^d (d = 2 or 3), with
straight edges. Every edge carries a width coefficient lambda_k: the tube
around it has half-width lambda_k * epsilon once a domain is instantiated.

Conventions:
- Vertex and edge ids are 1-based and consecutive.
- Each edge is stored with its endpoints sorted, so `edge.low` is the
  lower-indexed endpoint and `GraphPoint.arclength` is measured from it.

Public API:
    build_graph(positions, edge_specs) -> MetricGraph
    validate(graph)                    -> ValidationReport
    MetricGraph.edge_direction(j, k)   -> unit vector e_{j,k}
    MetricGraph.point_at(j, k, s)      -> point O_j + s * e_{j,k}
    MetricGraph.distance(x, x2)        -> graph distance d_Gamma
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence
import logging

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

# ---------------------------------------------------------------------------
# Logging
# ---------------------------------------------------------------------------

logger = logging.getLogger("tubesim.graph_core")

# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

# Relative tolerance between a stored edge length and |O_j - O_j'|.
LENGTH_RTOL: float = 1e-12

SUPPORTED_DIMENSIONS = (2, 3)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Vertex:
    id: int
    position: tuple[float, ...]

    @property
    def point(self) -> np.ndarray:
        return np.asarray(self.position, dtype=float)


@dataclass(frozen=True)
class Edge:
    id: int
    endpoints: tuple[int, int]
    length: float
    lam: float

    @property
    def low(self) -> int:
        return min(self.endpoints)

    @property
    def high(self) -> int:
        return max(self.endpoints)

    def other(self, j: int) -> int:
        if j == self.endpoints[0]:
            return self.endpoints[1]
        if j == self.endpoints[1]:
            return self.endpoints[0]
        raise ValueError(f"edge {self.id} is not incident to vertex {j}")

    def touches(self, j: int) -> bool:
        return j in self.endpoints


@dataclass(frozen=True)
class GraphPoint:
    """
    A point of the graph: either on edge `edge_id` at `arclength` from the
    lower-indexed endpoint, or exactly at vertex `vertex_id`.
    """
    edge_id: int | None = None
    arclength: float = 0.0
    vertex_id: int | None = None

    @classmethod
    def on_edge(cls, edge_id: int, arclength: float) -> "GraphPoint":
        return cls(edge_id=edge_id, arclength=float(arclength))

    @classmethod
    def at_vertex(cls, vertex_id: int) -> "GraphPoint":
        return cls(vertex_id=vertex_id)

    @property
    def is_vertex(self) -> bool:
        return self.vertex_id is not None


@dataclass(frozen=True)
class ValidationReport:
    problems: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.problems


@dataclass(frozen=True)
class MetricGraph:
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    adjacency: dict[int, tuple[int, ...]] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not self.adjacency:
            table: dict[int, list[int]] = {v.id: [] for v in self.vertices}
            for e in self.edges:
                for j in e.endpoints:
                    table.setdefault(j, []).append(e.id)
            object.__setattr__(
                self, "adjacency", {j: tuple(sorted(ks)) for j, ks in table.items()}
            )

    # -- lookups -----------------------------------------------------------

    @property
    def dimension(self) -> int:
        return len(self.vertices[0].position)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def vertex(self, j: int) -> Vertex:
        if not 1 <= j <= len(self.vertices):
            raise ValueError(f"unknown vertex id {j}")
        return self.vertices[j - 1]

    def edge(self, k: int) -> Edge:
        if not 1 <= k <= len(self.edges):
            raise ValueError(f"unknown edge id {k}")
        return self.edges[k - 1]

    def incident(self, j: int) -> tuple[int, ...]:
        self.vertex(j)
        return self.adjacency.get(j, ())

    def neighbor(self, j: int, k: int) -> int:
        return self.edge(k).other(j)

    @cached_property
    def positions(self) -> np.ndarray:
        return np.array([v.position for v in self.vertices], dtype=float)

    # -- geometry ----------------------------------------------------------

    def edge_direction(self, j: int, k: int) -> np.ndarray:
        """Unit vector pointing out of O_j along I_k."""
        e = self.edge(k)
        if not e.touches(j):
            raise ValueError(f"edge {k} is not incident to vertex {j}")
        start = self.vertex(j).point
        end = self.vertex(e.other(j)).point
        vec = end - start
        return vec / np.linalg.norm(vec)

    def point_at(self, j: int, k: int, s: float) -> np.ndarray:
        e = self.edge(k)
        if not e.touches(j):
            raise ValueError(f"edge {k} is not incident to vertex {j}")
        if s < 0.0 or s > e.length:
            raise ValueError(f"abscissa {s} outside [0, {e.length}] on edge {k}")
        return self.vertex(j).point + s * self.edge_direction(j, k)

    def locate(self, x: GraphPoint) -> np.ndarray:
        """Embedding of a graph point in R^d."""
        if x.is_vertex:
            return self.vertex(x.vertex_id).point
        e = self.edge(x.edge_id)
        return self.point_at(e.low, e.id, x.arclength)

    def offset_from(self, x: GraphPoint, j: int) -> float | None:
        """Distance along the edge of x from its endpoint j, None if not an endpoint."""
        if x.is_vertex:
            return 0.0 if x.vertex_id == j else None
        e = self.edge(x.edge_id)
        if j == e.low:
            return x.arclength
        if j == e.high:
            return e.length - x.arclength
        return None

    def anchors(self, x: GraphPoint) -> list[tuple[int, float]]:
        """(vertex, offset) pairs through which every path leaving x passes."""
        if x.is_vertex:
            return [(x.vertex_id, 0.0)]
        e = self.edge(x.edge_id)
        return [(e.low, x.arclength), (e.high, e.length - x.arclength)]

    def check_point(self, x: GraphPoint) -> None:
        if x.is_vertex:
            self.vertex(x.vertex_id)
            return
        if x.edge_id is None:
            raise ValueError("graph point has neither edge nor vertex")
        e = self.edge(x.edge_id)
        if not 0.0 <= x.arclength <= e.length:
            raise ValueError(
                f"arclength {x.arclength} outside [0, {e.length}] on edge {e.id}"
            )

    # -- metric ------------------------------------------------------------

    @cached_property
    def vertex_distances(self) -> np.ndarray:
        """All-pairs shortest path lengths between vertices (Dijkstra)."""
        n = len(self.vertices)
        rows = [e.endpoints[0] - 1 for e in self.edges]
        cols = [e.endpoints[1] - 1 for e in self.edges]
        weights = [e.length for e in self.edges]
        adj = csr_matrix((weights, (rows, cols)), shape=(n, n))
        return dijkstra(adj, directed=False)

    def distance(self, x: GraphPoint, x2: GraphPoint) -> float:
        """Graph distance d_Gamma between two graph points."""
        self.check_point(x)
        self.check_point(x2)
        best = np.inf
        if (
            not x.is_vertex
            and not x2.is_vertex
            and x.edge_id == x2.edge_id
        ):
            best = abs(x.arclength - x2.arclength)
        table = self.vertex_distances
        for a, da in self.anchors(x):
            for b, db in self.anchors(x2):
                best = min(best, da + table[a - 1, b - 1] + db)
        return float(best)

    def vertex_distance(self, x: GraphPoint, j: int) -> float:
        return self.distance(x, GraphPoint.at_vertex(j))


# ---------------------------------------------------------------------------
# Construction and validation
# ---------------------------------------------------------------------------

def build_graph(
    positions: Sequence[Sequence[float]],
    edge_specs: Iterable[tuple[tuple[int, int], float]],
    lengths: Sequence[float] | None = None,
) -> MetricGraph:
    """
    Build a MetricGraph from vertex coordinates and ((j, j'), lambda) pairs.

    Lengths are derived from the coordinates unless given explicitly; explicit
    lengths are kept as-is so that validate() can flag hand-written mismatches.
    """
    vertices = tuple(
        Vertex(id=i + 1, position=tuple(float(c) for c in p))
        for i, p in enumerate(positions)
    )
    pts = np.array([v.position for v in vertices], dtype=float)
    edges = []
    for idx, (ends, lam) in enumerate(edge_specs):
        j, j2 = (int(ends[0]), int(ends[1]))
        if lengths is not None:
            length = float(lengths[idx])
        elif 1 <= j <= len(vertices) and 1 <= j2 <= len(vertices):
            length = float(np.linalg.norm(pts[j2 - 1] - pts[j - 1]))
        else:
            length = float("nan")
        edges.append(
            Edge(id=idx + 1, endpoints=(min(j, j2), max(j, j2)), length=length, lam=float(lam))
        )
    graph = MetricGraph(vertices=vertices, edges=tuple(edges))
    logger.debug(
        "Built graph: %d vertices, %d edges, d=%d",
        graph.n_vertices,
        graph.n_edges,
        graph.dimension if vertices else 0,
    )
    return graph


def validate(graph: MetricGraph) -> ValidationReport:
    """Collect every violated structural invariant; never raises."""
    problems: list[str] = []

    if not graph.vertices:
        return ValidationReport(("graph has no vertices",))

    dims = {len(v.position) for v in graph.vertices}
    if len(dims) != 1:
        problems.append("vertex positions have mixed dimensions")
    elif graph.dimension not in SUPPORTED_DIMENSIONS:
        problems.append(f"dimension {graph.dimension} not in {SUPPORTED_DIMENSIONS}")

    for idx, v in enumerate(graph.vertices):
        if v.id != idx + 1:
            problems.append(f"vertex ids not consecutive at position {idx + 1}")
    seen_pos: dict[tuple[float, ...], int] = {}
    for v in graph.vertices:
        if v.position in seen_pos:
            problems.append(f"vertices {seen_pos[v.position]} and {v.id} share a position")
        seen_pos.setdefault(v.position, v.id)

    n = graph.n_vertices
    seen_pairs: dict[tuple[int, int], int] = {}
    for e in graph.edges:
        a, b = e.endpoints
        if not (1 <= a <= n and 1 <= b <= n):
            problems.append(f"edge {e.id}: unknown endpoint in {e.endpoints}")
            continue
        if a == b:
            problems.append(f"edge {e.id}: self-loop at vertex {a}")
            continue
        if (a, b) in seen_pairs:
            problems.append(f"edge {e.id}: duplicate of edge {seen_pairs[(a, b)]}")
        seen_pairs.setdefault((a, b), e.id)
        if not e.lam > 0.0:
            problems.append(f"edge {e.id}: lambda must be positive, got {e.lam}")
        euclid = float(np.linalg.norm(graph.vertex(b).point - graph.vertex(a).point))
        if not np.isfinite(e.length) or abs(e.length - euclid) > LENGTH_RTOL * max(euclid, 1.0):
            problems.append(
                f"edge {e.id}: length mismatch (stored {e.length}, euclidean {euclid})"
            )

    valid_edges = [e for e in graph.edges if all(1 <= j <= n for j in e.endpoints)]
    if n > 1:
        rows = [e.endpoints[0] - 1 for e in valid_edges]
        cols = [e.endpoints[1] - 1 for e in valid_edges]
        adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        n_comp, _ = connected_components(adj, directed=False)
        if n_comp != 1:
            problems.append(f"graph is disconnected ({n_comp} components)")

    if problems:
        logger.debug("Graph validation found %d problem(s): %s", len(problems), problems)
    return ValidationReport(tuple(problems))


if __name__ == "__main__":
    logging.basicConfig(
        level=logging.DEBUG,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )

    star = build_graph(
        [(0.0, 0.0), (1.5, 0.0), (-0.75, 1.299038105676658), (-0.75, -1.299038105676658)],
        [((1, 2), 1.0), ((1, 3), 2.0), ((1, 4), 1.0)],
    )
    print("valid:", validate(star).ok)
    print("e_{1,1} =", star.edge_direction(1, 1))
    print(
        "d(mid 1, mid 2) =",
        star.distance(GraphPoint.on_edge(1, 0.75), GraphPoint.on_edge(2, 0.75)),
    )
