"""The approximating graph of a net: epsilon-rule edges, hop metric, masses."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from ._util import REL_TOL, as_fraction, readonly
from .net import EpsNet
from .spaces import BallSpec, SampledSpace

UNREACHED = -1


@dataclass(frozen=True, eq=False)
class NetGraph:
    """Vertices of a net, edges for ``eps <= d <= 3 eps``, masses ``mu(B(x, eps))``.

    Vertices are numbered ``0..k-1`` in the order of ``vertex_points`` (sorted
    space indices).  Adjacency is stored in CSR form with sorted neighbor
    lists.  Distances are integer hop counts, multiplied by ``epsilon`` only
    when read.
    """

    epsilon: Fraction
    vertex_points: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    masses: np.ndarray
    coords: np.ndarray | None = None
    boundary_margin: np.ndarray | None = None
    net: EpsNet | None = None
    space: SampledSpace | None = None
    tie_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "epsilon", as_fraction(self.epsilon))
        k = len(self.vertex_points)
        for name in ("vertex_points", "indptr", "indices"):
            object.__setattr__(self, name, readonly(np.asarray(getattr(self, name), dtype=np.int64)))
        m = np.asarray(self.masses, dtype=np.float64)
        if m.shape != (k,):
            raise ValueError("one mass per vertex required")
        if np.any(~(m > 0)) or not np.all(np.isfinite(m)):
            raise ValueError("vertex masses must be positive and finite")
        object.__setattr__(self, "masses", readonly(m))
        if self.coords is not None:
            object.__setattr__(self, "coords", readonly(np.asarray(self.coords, dtype=np.float64)))
        bm = np.full(k, np.inf) if self.boundary_margin is None else self.boundary_margin
        object.__setattr__(self, "boundary_margin", readonly(np.asarray(bm, dtype=np.float64)))
        if len(self.indptr) != k + 1:
            raise ValueError("indptr must have one entry per vertex plus one")

    # structure -------------------------------------------------------------

    @property
    def eps(self) -> float:
        return float(self.epsilon)

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_points)

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @cached_property
    def degrees(self) -> np.ndarray:
        return readonly(np.diff(self.indptr))

    @cached_property
    def csr(self) -> sparse.csr_matrix:
        k = self.n_vertices
        data = np.ones(len(self.indices), dtype=np.float64)
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=(k, k))

    def edges(self) -> np.ndarray:
        """Edges ``(a, b)`` with ``a < b``, shape (E, 2), lexicographic."""
        rows = np.repeat(np.arange(self.n_vertices), self.degrees)
        keep = rows < self.indices
        return np.stack([rows[keep], self.indices[keep]], axis=1)

    @cached_property
    def components(self) -> np.ndarray:
        _, labels = csgraph.connected_components(self.csr, directed=False)
        return readonly(labels)

    def vertex_of(self, point_index: int) -> int:
        """Vertex id of a space point, or raise if the point is not a vertex."""
        pos = int(np.searchsorted(self.vertex_points, point_index))
        if pos >= self.n_vertices or self.vertex_points[pos] != point_index:
            raise KeyError(f"point {point_index} is not a vertex")
        return pos

    def interior_mask(self, radius) -> np.ndarray:
        """Vertices whose graph balls of this radius ignore the sample boundary.

        A hop ball of radius ``r`` reaches Euclidean distance below ``3 r``
        and a mass ball adds ``eps``, so interior means margin >= 3r + eps.
        """
        return self.boundary_margin >= 3.0 * float(radius) + self.eps

    @classmethod
    def from_adjacency(cls, n_vertices: int, edges, masses, epsilon, coords=None) -> "NetGraph":
        """Abstract graph from an edge list, for tests and tiny instances."""
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("loops are not allowed")
        if len(e) and (e.min() < 0 or e.max() >= n_vertices):
            raise ValueError("edge endpoint out of range")
        indptr, indices = _csr_from_pairs(n_vertices, e[:, 0], e[:, 1])
        return cls(epsilon=epsilon, vertex_points=np.arange(n_vertices), indptr=indptr,
                   indices=indices, masses=masses, coords=coords)

    # export ----------------------------------------------------------------

    def to_dict(self) -> dict:
        verts = []
        for v in range(self.n_vertices):
            verts.append({
                "index": int(self.vertex_points[v]),
                "coords": None if self.coords is None else self.coords[v].tolist(),
                "mass": float(self.masses[v]),
                "degree": int(self.degrees[v]),
            })
        return {"epsilon": float(self.epsilon), "vertices": verts,
                "edges": self.edges().tolist()}

    def adjacency_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["source", "target"])
        for a, b in self.edges().tolist():
            w.writerow([a, b])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class VertexFunction:
    """Real values on the vertices of a graph."""

    values: np.ndarray
    graph: NetGraph

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.graph.n_vertices,):
            raise ValueError("one value per vertex required")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertex function values must be finite")
        object.__setattr__(self, "values", readonly(v))


def _csr_from_pairs(k: int, I, J) -> tuple[np.ndarray, np.ndarray]:
    rows = np.concatenate([I, J])
    cols = np.concatenate([J, I])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    if len(rows) > 1:
        dup = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
        keep = np.concatenate([[True], ~dup])
        rows, cols = rows[keep], cols[keep]
    indptr = np.zeros(k + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    return np.cumsum(indptr), cols.astype(np.int64)


def build_graph(space: SampledSpace, net: EpsNet) -> NetGraph:
    """Approximating graph of ``net`` inside ``space``.

    Edges join members with ``eps <= d <= 3 eps`` (exact on lattices), and
    each vertex carries the mass ``mu(B(x, eps))`` of its strict ball.
    """
    eps = net.epsilon
    members = net.member_indices
    k = len(members)
    I, J = space.pairs_within(3 * eps, "le", idx=members)
    lower = space.compare(I, J, eps, "ge")
    I, J = I[lower], J[lower]
    ties = space.near_ties(I, J, 3 * eps)
    pos_i = np.searchsorted(members, I)
    pos_j = np.searchsorted(members, J)
    indptr, indices = _csr_from_pairs(k, pos_i, pos_j)
    masses = space.ball_measures(members, eps) if k else np.zeros(0)
    coords = space.points[members] if space.distance_kind == "euclidean" else None
    return NetGraph(epsilon=eps, vertex_points=members, indptr=indptr, indices=indices,
                    masses=masses, coords=coords,
                    boundary_margin=space.boundary_margin(members), net=net, space=space,
                    tie_count=ties)


def max_hops(radius, epsilon) -> int:
    """Largest hop count ``h`` with ``h * eps < radius``.

    The ratio is taken exactly when possible; a float ratio within
    ``REL_TOL`` of an integer is snapped to it.
    """
    ratio = as_fraction(radius) / as_fraction(epsilon)
    k = round(ratio)
    if abs(ratio - k) <= REL_TOL * max(1, float(ratio)):
        return max(int(k) - 1, 0)
    return max(math.floor(ratio), 0)


def hop_distances(g: NetGraph, sources, limit: int | None = None) -> np.ndarray:
    """Integer hop counts from each source; ``-1`` when unreached.

    Returns a 1-d array for a scalar source and a 2-d array otherwise.
    ``limit`` caps the search depth.
    """
    scalar = np.ndim(sources) == 0
    src = np.atleast_1d(np.asarray(sources, dtype=np.int64))
    if g.n_vertices == 0:
        raise ValueError("empty graph")
    lim = np.inf if limit is None else float(limit) + 0.5
    out = np.empty((len(src), g.n_vertices), dtype=np.int64)
    chunk = max(1, 4_000_000 // max(g.n_vertices, 1))
    for s in range(0, len(src), chunk):
        d = csgraph.dijkstra(g.csr, directed=True, indices=src[s:s + chunk],
                             unweighted=True, limit=lim)
        d = np.atleast_2d(d)
        fin = np.isfinite(d)
        block = np.full(d.shape, UNREACHED, dtype=np.int64)
        block[fin] = np.rint(d[fin]).astype(np.int64)
        out[s:s + chunk] = block
    return out[0] if scalar else out


def graph_distance(g: NetGraph, a: int, b: int) -> float:
    """Hop count times epsilon, or ``inf`` when ``b`` is unreachable."""
    if a == b:
        return 0.0
    h = hop_distances(g, a)[b]
    return math.inf if h == UNREACHED else h * g.eps


def graph_ball(g: NetGraph, ball: BallSpec) -> np.ndarray:
    """Sorted vertices at graph distance strictly below the radius."""
    h = max_hops(ball.radius, g.epsilon)
    if h == 0:
        return np.array([ball.center], dtype=np.int64)
    d = hop_distances(g, ball.center, limit=h)
    return np.flatnonzero(d >= 0)


def ball_mass(g: NetGraph, vertices) -> float:
    """Total vertex mass of a nonempty vertex set."""
    v = np.asarray(vertices, dtype=np.int64)
    if v.size == 0:
        raise ValueError("ball_mass of an empty vertex set")
    return float(g.masses[v].sum())


def euclidean_ball_vertices(g: NetGraph, center_vertex: int, radius) -> np.ndarray:
    """Vertices whose points lie at space distance strictly below ``radius``."""
    if g.space is None:
        raise ValueError("graph has no underlying space")
    c = int(g.vertex_points[center_vertex])
    _, J = g.space.cross_pairs([c], radius, "lt", B=g.vertex_points)
    return np.searchsorted(g.vertex_points, np.sort(J))
