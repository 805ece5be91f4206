"""Finite samples of metric measure spaces.

A :class:`SampledSpace` holds a finite witness set of points together with a
distance evaluator and a ball-measure evaluator.  Points lying on a scaled
integer lattice ``q * Z^d`` carry their integer coordinates so that distance
thresholds can be decided with exact integer arithmetic.
"""

from __future__ import annotations

import csv
import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from ._util import REL_TOL, as_fraction, readonly

DISTANCE_KINDS = ("euclidean", "explicit-matrix")
MEASURE_KINDS = ("lebesgue-analytic", "empirical-counting", "empirical-weighted")

_OPS = {"lt": operator.lt, "le": operator.le, "gt": operator.gt, "ge": operator.ge}
_UNIT_BALL_VOLUME = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}
_INT64_SAFE = 2**62


@dataclass(frozen=True)
class BallSpec:
    """Strict ball ``{y : d(center, y) < radius}`` around a point index."""

    center: int
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius!r}")


@dataclass(frozen=True, eq=False)
class SampledSpace:
    """Finite sample of a metric measure space.

    Parameters
    ----------
    points : ndarray, shape (n, d)
        Coordinates.  For ``explicit-matrix`` spaces they are only labels.
    distance_kind : {"euclidean", "explicit-matrix"}
    measure_kind : {"lebesgue-analytic", "empirical-counting", "empirical-weighted"}
    weights : ndarray, optional
        Normalized point masses for the empirical measures.
    lattice_scale : Fraction, optional
        ``q`` when every point lies on ``q * Z^d``.
    lattice_coords : ndarray of int64, optional
        ``points / q`` as exact integers.
    quasiconvexity_L : float, optional
        Declared quasiconvexity constant, never computed.
    matrix : ndarray, optional
        Full distance matrix for ``explicit-matrix`` spaces.
    full_space : bool
        True when the sample stands in for all of ``R^d`` so that the analytic
        Lebesgue ball volume applies.
    """

    points: np.ndarray
    distance_kind: str = "euclidean"
    measure_kind: str = "empirical-counting"
    weights: np.ndarray | None = None
    lattice_scale: Fraction | None = None
    lattice_coords: np.ndarray | None = None
    quasiconvexity_L: float | None = None
    label: str = ""
    matrix: np.ndarray | None = None
    full_space: bool = False
    box_halfwidth: Fraction | None = field(default=None)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-d array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", readonly(pts))
        if self.distance_kind not in DISTANCE_KINDS:
            raise ValueError(f"unknown distance kind {self.distance_kind!r}")
        if self.measure_kind not in MEASURE_KINDS:
            raise ValueError(f"unknown measure kind {self.measure_kind!r}")
        n = pts.shape[0]
        if self.measure_kind == "lebesgue-analytic":
            if self.distance_kind != "euclidean":
                raise ValueError("analytic Lebesgue measure needs euclidean distance")
            object.__setattr__(self, "weights", None)
        else:
            if self.weights is None:
                w = np.full(n, 1.0 / n) if n else np.zeros(0)
            else:
                w = np.asarray(self.weights, dtype=np.float64)
                if w.shape != (n,):
                    raise ValueError("one weight per point required")
                if np.any(~np.isfinite(w)) or np.any(w <= 0):
                    raise ValueError("weights must be positive and finite")
                w = w / w.sum()
            object.__setattr__(self, "weights", readonly(w))
        if self.lattice_scale is not None:
            q = as_fraction(self.lattice_scale)
            if q <= 0:
                raise ValueError("lattice scale must be positive")
            object.__setattr__(self, "lattice_scale", q)
            if self.lattice_coords is None:
                raise ValueError("lattice spaces need integer coordinates")
            lc = np.asarray(self.lattice_coords, dtype=np.int64).reshape(pts.shape)
            object.__setattr__(self, "lattice_coords", readonly(lc))
        if self.distance_kind == "explicit-matrix":
            if self.matrix is None:
                raise ValueError("explicit-matrix spaces need a distance matrix")
            M = np.asarray(self.matrix, dtype=np.float64)
            if M.shape != (n, n):
                raise ValueError("distance matrix must be n x n")
            if not np.array_equal(M, M.T) or np.any(np.diag(M) != 0):
                raise ValueError("distance matrix must be symmetric with zero diagonal")
            off = M[~np.eye(n, dtype=bool)]
            if np.any(off <= 0) or not np.all(np.isfinite(off)):
                raise ValueError("duplicate point: zero or invalid distance between distinct indices")
            object.__setattr__(self, "matrix", readonly(M))
        if self.quasiconvexity_L is not None and self.quasiconvexity_L < 1:
            raise ValueError("quasiconvexity constant must be >= 1")

    # basic shape -----------------------------------------------------------

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    @property
    def is_lattice(self) -> bool:
        return self.lattice_scale is not None

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.points)

    @property
    def covering_radius(self) -> float:
        """Radius within which the sample covers the region it stands for.

        For lattice samples this is half the cell diagonal; other samples are
        taken as exact (0).
        """
        if self.is_lattice:
            return float(self.lattice_scale) * math.sqrt(self.dim) / 2.0
        return 0.0

    # distances -------------------------------------------------------------

    def distances(self, i, j) -> np.ndarray:
        """Distances between paired index arrays ``i`` and ``j``."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        if self.distance_kind == "explicit-matrix":
            return self.matrix[i, j]
        if self.is_lattice:
            return float(self.lattice_scale) * np.sqrt(self.sq_lattice(i, j).astype(np.float64))
        diff = self.points[i] - self.points[j]
        return np.sqrt((diff * diff).sum(axis=-1))

    def distance(self, i: int, j: int) -> float:
        return float(self.distances(np.array([i]), np.array([j]))[0])

    def distances_from(self, i: int, idx=None) -> np.ndarray:
        idx = np.arange(self.n) if idx is None else np.asarray(idx, dtype=np.int64)
        return self.distances(np.full(idx.shape, i, dtype=np.int64), idx)

    def sq_lattice(self, i, j) -> np.ndarray:
        """Exact squared distances in lattice units (int64)."""
        diff = self.lattice_coords[i] - self.lattice_coords[j]
        return (diff * diff).sum(axis=-1)

    def compare(self, i, j, r, op: str = "lt", k=None) -> np.ndarray:
        """Decide ``d(i, j) op k*r`` for paired index arrays.

        Lattice spaces decide it exactly with integers; other spaces compare
        the floating distances directly.  ``k`` is an optional nonnegative
        integer multiplier per pair.
        """
        cmp = _OPS[op]
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        if self.is_lattice:
            t = (as_fraction(r) / self.lattice_scale) ** 2
            sq = self.sq_lattice(i, j)
            kk = np.ones(sq.shape, dtype=np.int64) if k is None else np.asarray(k, dtype=np.int64)
            top = int(sq.max(initial=0)) * t.denominator
            kmax = int(kk.max(initial=0))
            if max(top, kmax * kmax * t.numerator) < _INT64_SAFE:
                return cmp(sq * t.denominator, kk * kk * t.numerator)
            lhs = sq.astype(object) * t.denominator
            rhs = (kk.astype(object) ** 2) * t.numerator
            return np.array(cmp(lhs, rhs), dtype=bool).reshape(sq.shape)
        d = self.distances(i, j)
        rr = float(r) if k is None else np.asarray(k, dtype=np.float64) * float(r)
        return cmp(d, rr)

    def near_ties(self, i, j, r) -> int:
        """Number of pairs whose distance lies within REL_TOL of ``r``.

        Lattice comparisons are exact and report 0.
        """
        if self.is_lattice or len(np.atleast_1d(i)) == 0:
            return 0
        d = self.distances(i, j)
        rr = float(r)
        return int(np.count_nonzero(np.abs(d - rr) <= REL_TOL * rr))

    def pairs_within(self, r, op: str = "lt", idx=None) -> tuple[np.ndarray, np.ndarray]:
        """All index pairs ``(a, b)``, ``a < b``, inside ``idx`` with ``d op r``."""
        idx = np.arange(self.n) if idx is None else np.asarray(idx, dtype=np.int64)
        if len(idx) < 2:
            e = np.zeros(0, dtype=np.int64)
            return e, e
        if self.distance_kind == "explicit-matrix":
            sub = self.matrix[np.ix_(idx, idx)]
            a, b = np.nonzero(np.triu(_OPS[op](sub, float(r)), k=1))
            I, J = idx[a], idx[b]
        else:
            tree = cKDTree(self.points[idx])
            pr = tree.query_pairs(_search_radius(r), output_type="ndarray")
            I, J = idx[pr[:, 0]], idx[pr[:, 1]]
            keep = self.compare(I, J, r, op)
            I, J = I[keep], J[keep]
        lo, hi = np.minimum(I, J), np.maximum(I, J)
        order = np.lexsort((hi, lo))
        return lo[order].astype(np.int64), hi[order].astype(np.int64)

    def cross_pairs(self, A, r, op: str = "lt", B=None) -> tuple[np.ndarray, np.ndarray]:
        """All pairs ``(a, b)`` with ``a`` in ``A``, ``b`` in ``B`` and ``d op r``.

        ``B`` defaults to the whole space.  Pairs with ``a == b`` are included
        when the predicate holds at distance 0.
        """
        A = np.asarray(A, dtype=np.int64)
        B = np.arange(self.n) if B is None else np.asarray(B, dtype=np.int64)
        if len(A) == 0 or len(B) == 0:
            e = np.zeros(0, dtype=np.int64)
            return e, e
        if self.distance_kind == "explicit-matrix":
            a, b = np.nonzero(_OPS[op](self.matrix[np.ix_(A, B)], float(r)))
            return A[a], B[b]
        tree = self.tree if len(B) == self.n and B[0] == 0 and B[-1] == self.n - 1 else cKDTree(self.points[B])
        hits = tree.query_ball_point(self.points[A], _search_radius(r), return_sorted=False)
        counts = np.fromiter((len(h) for h in hits), dtype=np.int64, count=len(hits))
        if counts.sum() == 0:
            e = np.zeros(0, dtype=np.int64)
            return e, e
        J = np.concatenate([np.asarray(h, dtype=np.int64) for h in hits if len(h)])
        I = np.repeat(A, counts)
        J = B[J]
        keep = self.compare(I, J, r, op)
        return I[keep], J[keep]

    def nearest_member(self, members) -> tuple[np.ndarray, np.ndarray]:
        """Distance from every point to its nearest member and that member."""
        members = np.asarray(members, dtype=np.int64)
        if len(members) == 0:
            raise ValueError("empty member set")
        if self.distance_kind == "explicit-matrix":
            sub = self.matrix[:, members]
            arg = np.argmin(sub, axis=1)
            return sub[np.arange(self.n), arg], members[arg]
        _, pos = cKDTree(self.points[members]).query(self.points, k=1)
        near = members[pos]
        return self.distances(np.arange(self.n), near), near

    # extent ----------------------------------------------------------------

    def boundary_margin(self, idx=None) -> np.ndarray:
        """Distance from points to the boundary of the sample's convex extent.

        Full-space samples report their box margin too; infinite margins are
        returned for explicit-matrix spaces, which have no extent.
        """
        idx = np.arange(self.n) if idx is None else np.asarray(idx, dtype=np.int64)
        if self.distance_kind == "explicit-matrix":
            return np.full(len(idx), np.inf)
        P = self.points[idx]
        if self.box_halfwidth is not None:
            return float(self.box_halfwidth) - np.abs(P).max(axis=1)
        lo, hi = self.points.min(axis=0), self.points.max(axis=0)
        box = np.minimum(P - lo, hi - P).min(axis=1)
        if self.dim == 1 or self.n <= self.dim + 1:
            return box
        try:
            hull = ConvexHull(self.points)
        except QhullError:
            return box
        # facet equations n.x + c <= 0 inside, n unit length
        eq = hull.equations
        return np.maximum(-(P @ eq[:, :-1].T + eq[:, -1]).max(axis=1), 0.0)

    # measure ---------------------------------------------------------------

    def ball_measure(self, center: int, radius) -> float:
        return float(self.ball_measures(np.array([center]), radius)[0])

    def ball_measures(self, centers, radius) -> np.ndarray:
        """Measures of the strict balls of one radius around many centers."""
        centers = np.asarray(centers, dtype=np.int64)
        if not float(radius) > 0:
            raise ValueError("radius must be positive")
        if np.any((centers < 0) | (centers >= self.n)):
            raise IndexError("ball center out of range")
        if self.measure_kind == "lebesgue-analytic":
            if not (self.full_space and self.is_lattice):
                raise ValueError(
                    "analytic Lebesgue measure is only defined for full-space lattice "
                    "samples; use an empirical measure instead"
                )
            vol = _UNIT_BALL_VOLUME[self.dim] * float(radius) ** self.dim
            return np.full(len(centers), vol)
        I, J = self.cross_pairs(centers, radius, "lt")
        pos = np.searchsorted(np.unique(centers), I)
        tot = np.bincount(pos, weights=self.weights[J], minlength=len(np.unique(centers)))
        return tot[np.searchsorted(np.unique(centers), centers)]

    def describe(self) -> dict:
        return {
            "label": self.label,
            "n_points": self.n,
            "dimension": self.dim,
            "distance_kind": self.distance_kind,
            "measure_kind": self.measure_kind,
            "lattice_scale": None if self.lattice_scale is None else str(self.lattice_scale),
            "quasiconvexity_L": self.quasiconvexity_L,
            "extent_min": self.points.min(axis=0) if self.n else [],
            "extent_max": self.points.max(axis=0) if self.n else [],
        }

    # constructors ----------------------------------------------------------

    @classmethod
    def from_points(cls, points, weights=None, label: str = "cloud", quasiconvexity_L=None) -> "SampledSpace":
        """Euclidean empirical space; duplicates are rejected."""
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if len(pts) == 0:
            raise ValueError("empty point cloud")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise ValueError("duplicate point in sample")
        kind = "empirical-counting" if weights is None else "empirical-weighted"
        return cls(points=pts, measure_kind=kind, weights=weights, label=label,
                   quasiconvexity_L=quasiconvexity_L)

    @classmethod
    def from_distance_matrix(cls, matrix, weights=None, label: str = "matrix") -> "SampledSpace":
        M = np.asarray(matrix, dtype=np.float64)
        kind = "empirical-counting" if weights is None else "empirical-weighted"
        return cls(points=np.arange(len(M), dtype=np.float64).reshape(-1, 1),
                   distance_kind="explicit-matrix", measure_kind=kind, weights=weights,
                   matrix=M, label=label)


def _search_radius(r) -> float:
    r = float(r)
    return r * (1.0 + 4 * REL_TOL) + 1e-300


def ball_measure(space: SampledSpace, ball: BallSpec) -> float:
    """Measure of a strict ball; analytic volume or empirical weight inside."""
    return space.ball_measure(ball.center, ball.radius)


def make_euclidean_lattice(dimension: int, scale, extent: int,
                           measure_kind: str = "lebesgue-analytic") -> SampledSpace:
    """The points ``q * {-extent..extent}^d`` of the scaled lattice ``q Z^d``.

    Parameters
    ----------
    dimension : int
        1, 2 or 3.
    scale : rational-like
        Lattice spacing ``q``; floats are read exactly, strings like ``"1/4"``
        are accepted.
    extent : int
        Half-width in lattice steps.
    measure_kind : str
        ``lebesgue-analytic`` (default) treats the sample as the full space;
        an empirical kind treats it as a bounded domain.
    """
    if dimension not in (1, 2, 3):
        raise ValueError("dimension must be 1, 2 or 3")
    q = as_fraction(scale)
    if q <= 0:
        raise ValueError("lattice scale must be positive")
    if int(extent) != extent or extent < 1:
        raise ValueError("extent must be a positive integer")
    extent = int(extent)
    axis = np.arange(-extent, extent + 1, dtype=np.int64)
    grids = np.meshgrid(*([axis] * dimension), indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)
    full = measure_kind == "lebesgue-analytic"
    return SampledSpace(
        points=coords.astype(np.float64) * float(q),
        measure_kind=measure_kind,
        lattice_scale=q,
        lattice_coords=coords,
        quasiconvexity_L=1.0,
        label=f"lattice(d={dimension}, q={q}, extent={extent})",
        full_space=full,
        box_halfwidth=q * extent,
    )


def sierpinski_prefractal(level: int) -> SampledSpace:
    """Vertices of the level-``n`` Sierpinski gasket prefractal with side 1.

    Level ``n`` has ``3 (3^n + 1) / 2`` vertices.  Points carry the
    empirical counting measure.
    """
    if int(level) != level or not 1 <= level <= 10:
        raise ValueError("level must be an integer in [1, 10]")
    level = int(level)
    size = 2**level
    # triangles as (a, b) corners in the basis (1, 0), (1/2, sqrt3/2), side s
    corners = np.zeros((1, 2), dtype=np.int64)
    s = size
    for _ in range(level):
        s //= 2
        corners = np.concatenate([corners, corners + [s, 0], corners + [0, s]])
    verts = np.concatenate([corners, corners + [s, 0], corners + [0, s]])
    verts = np.unique(verts, axis=0)
    x = (verts[:, 0] + 0.5 * verts[:, 1]) / size
    y = verts[:, 1] * (math.sqrt(3.0) / 2.0) / size
    return SampledSpace(points=np.stack([x, y], axis=1), measure_kind="empirical-counting",
                        label=f"sierpinski(level={level})")


def load_point_cloud(path, measure_kind: str = "empirical-counting") -> SampledSpace:
    """Read a CSV point cloud.

    One point per row, columns ``x1..xd`` with a trailing weight column when
    ``measure_kind`` is ``empirical-weighted``.  Lines starting with ``#`` are
    comments; a first row that is not numeric is taken as a header.
    """
    if measure_kind not in ("empirical-counting", "empirical-weighted"):
        raise ValueError("point clouds carry an empirical measure")
    rows: list[list[float]] = []
    width = None
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in row]
            if not cells or all(c == "" for c in cells) or cells[0].startswith("#"):
                continue
            try:
                vals = [float(c) for c in cells]
            except ValueError:
                if not rows and width is None:
                    width = len(cells)  # header row
                    continue
                raise ValueError(f"line {lineno}: non-numeric value in {row!r}") from None
            if not all(math.isfinite(v) for v in vals):
                raise ValueError(f"line {lineno}: non-finite value")
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ValueError(f"line {lineno}: expected {width} columns, got {len(vals)}")
            rows.append(vals)
    if not rows:
        raise ValueError("empty point cloud")
    data = np.asarray(rows, dtype=np.float64)
    weights = None
    if measure_kind == "empirical-weighted":
        if data.shape[1] < 2:
            raise ValueError("weighted cloud needs a weight column")
        data, weights = data[:, :-1], data[:, -1]
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
    if len(np.unique(data, axis=0)) != len(data):
        raise ValueError("duplicate point in sample")
    return SampledSpace(points=data, measure_kind=measure_kind, weights=weights,
                        label=f"cloud({Path(path).name})")
