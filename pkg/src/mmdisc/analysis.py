"""Doubling constants, measure comparability and bi-Lipschitz distortion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._util import as_fraction
from .graph import NetGraph, hop_distances, max_hops
from .spaces import SampledSpace


@dataclass(frozen=True)
class DoublingReport:
    """Largest sampled ratio ``mass(B(c, 2r)) / mass(B(c, r))``.

    ``table`` holds one row ``(center, radius, mass_r, mass_2r, ratio)`` per
    sampled ball and is only serialized on request.
    """

    target: str
    sampled_centers: int
    radii: list
    max_ratio: float
    theoretical_bound: float | None
    witness: tuple
    excluded_boundary: int = 0
    table: list = field(default_factory=list, repr=False)

    def to_dict(self, with_table: bool = False) -> dict:
        out = {
            "target": self.target,
            "sampled_centers": self.sampled_centers,
            "radii": list(self.radii),
            "max_ratio": self.max_ratio,
            "theoretical_bound": self.theoretical_bound,
            "witness": {"center": self.witness[0], "radius": self.witness[1]},
            "excluded_boundary": self.excluded_boundary,
        }
        if with_table:
            out["table"] = self.table
        return out


@dataclass(frozen=True)
class TheoreticalBounds:
    degree_bound: float
    alpha: int
    C_m_bound: float


@dataclass(frozen=True)
class ComparabilityReport:
    """Extreme ratios of graph ball mass to space ball measure."""

    K_lower: float
    K_upper: float
    radii_tested: list
    scale_floor: float
    witness_lower: tuple = ()
    witness_upper: tuple = ()
    table: list = field(default_factory=list, repr=False)

    @property
    def K(self) -> float:
        return max(self.K_upper, 1.0 / self.K_lower)

    def to_dict(self, with_table: bool = False) -> dict:
        out = {
            "K": self.K, "K_lower": self.K_lower, "K_upper": self.K_upper,
            "radii_tested": list(self.radii_tested), "scale_floor": self.scale_floor,
            "witness_lower": list(self.witness_lower), "witness_upper": list(self.witness_upper),
        }
        if with_table:
            out["table"] = self.table
        return out


@dataclass(frozen=True)
class DistortionReport:
    """Ratios between graph and space distances over sampled vertex pairs.

    ``L_estimate`` inverts the lower embedding bound, ``bilipschitz`` is the
    plain two-sided distortion ``max(d_V/d_X, d_X/d_V)``.
    """

    L_estimate: float
    max_graph_over_space: float
    max_space_over_graph: float
    max_ratio_pair: tuple
    min_ratio_pair: tuple
    connected_fraction: float
    pairs_tested: int
    upper_bound_holds: bool
    declared_L_consistent: bool | None = None

    @property
    def bilipschitz(self) -> float:
        return max(self.max_graph_over_space, self.max_space_over_graph, 1.0)

    def to_dict(self) -> dict:
        return {
            "L_estimate": self.L_estimate, "bilipschitz": self.bilipschitz,
            "max_graph_over_space": self.max_graph_over_space,
            "max_space_over_graph": self.max_space_over_graph,
            "max_ratio_pair": list(self.max_ratio_pair),
            "min_ratio_pair": list(self.min_ratio_pair),
            "connected_fraction": self.connected_fraction,
            "pairs_tested": self.pairs_tested,
            "upper_bound_holds": self.upper_bound_holds,
            "declared_L_consistent": self.declared_L_consistent,
        }


def theoretical_bounds(C_mu: float, L: float) -> TheoreticalBounds:
    """Degree bound ``C_mu**4`` and graph doubling bound ``C_mu**(8 + 2 alpha)``.

    ``alpha`` is the least integer with ``2**alpha >= L + 1``.
    """
    if not C_mu >= 1 or not L >= 1:
        raise ValueError("C_mu and L must be at least 1")
    target = as_fraction(L) + 1
    alpha = 0
    while Fraction(2) ** alpha < target:
        alpha += 1
    return TheoreticalBounds(degree_bound=float(C_mu) ** 4, alpha=alpha,
                             C_m_bound=float(C_mu) ** (8 + 2 * alpha))


def log_radii(r_min: float, r_max: float, count: int = 12) -> list[float]:
    if count == 1:
        return [float(r_min)]
    return [float(x) for x in np.geomspace(r_min, r_max, count)]


def _pick(pool: np.ndarray, centers, seed: int) -> np.ndarray:
    if np.ndim(centers) == 0:
        k = int(centers)
        if len(pool) <= k:
            return np.sort(pool)
        rng = np.random.default_rng(seed)
        return np.sort(rng.choice(pool, size=k, replace=False))
    return np.asarray(centers, dtype=np.int64)


def estimate_doubling(target, centers=64, radii=None, seed: int = 0,
                      exclude_boundary: bool = True, theoretical_bound: float | None = None,
                      n_radii: int = 12) -> DoublingReport:
    """Sampled doubling constant of a space, a graph or a one-complex measure.

    Parameters
    ----------
    target : SampledSpace, NetGraph or ComplexMeasure
    centers : int or sequence of int
        Number of seeded centers, or explicit center indices.  For complex
        targets explicit centers are complex points.
    radii : sequence of float, optional
        Defaults to ``n_radii`` log-spaced radii in ``[eps, 8 eps]`` for
        graphs and complexes, ``[diam/64, diam/4]`` for spaces.
    exclude_boundary : bool
        Drop centers whose doubled ball may feel the sample boundary.
    """
    if isinstance(target, NetGraph):
        return _doubling_graph(target, centers, radii, seed, exclude_boundary,
                               theoretical_bound, n_radii)
    if isinstance(target, SampledSpace):
        return _doubling_space(target, centers, radii, seed, exclude_boundary,
                               theoretical_bound, n_radii)
    from .onecomplex import ComplexMeasure, complex_doubling
    if isinstance(target, ComplexMeasure):
        rows = complex_doubling(target, centers, radii, seed, exclude_boundary, n_radii)
        return _report("complex", rows, radii, theoretical_bound)
    raise TypeError(f"cannot estimate doubling for {type(target).__name__}")


def _report(kind, rows, radii, bound, excluded=0) -> DoublingReport:
    if not rows:
        raise ValueError("no admissible centers for the doubling estimate")
    best = max(rows, key=lambda row: row[4])
    ncent = len({str(row[0]) for row in rows})
    used = sorted({row[1] for row in rows}) if radii is None else [float(r) for r in radii]
    return DoublingReport(target=kind, sampled_centers=ncent, radii=used,
                          max_ratio=float(best[4]), theoretical_bound=bound,
                          witness=(best[0], best[1]), excluded_boundary=excluded,
                          table=[list(r) for r in rows])


def _doubling_graph(g, centers, radii, seed, exclude_boundary, bound, n_radii):
    radii = log_radii(g.eps, 8 * g.eps, n_radii) if radii is None else [float(r) for r in radii]
    if min(radii) <= 0:
        raise ValueError("radii must be positive")
    pool = np.arange(g.n_vertices)
    excluded = 0
    if exclude_boundary:
        ok = g.interior_mask(2 * max(radii))
        excluded = int((~ok).sum())
        pool = pool[ok]
    cs = _pick(pool, centers, seed)
    h_small = [max_hops(r, g.epsilon) for r in radii]
    h_big = [max_hops(2 * r, g.epsilon) for r in radii]
    d = hop_distances(g, cs, limit=max(h_big))
    rows = []
    for row, c in zip(d, cs):
        reach = row >= 0
        cm = np.cumsum(np.bincount(row[reach], weights=g.masses[reach], minlength=max(h_big) + 1))
        for r, a, b in zip(radii, h_small, h_big):
            m1, m2 = cm[a], cm[b]
            if not m1 > 0:
                raise ValueError("ball of zero mass")
            rows.append([int(c), r, float(m1), float(m2), float(m2 / m1)])
    return _report("graph", rows, radii, bound, excluded)


def _doubling_space(space, centers, radii, seed, exclude_boundary, bound, n_radii):
    if radii is None:
        span = float(np.ptp(space.points, axis=0).max()) if space.n > 1 else 1.0
        radii = log_radii(span / 64, span / 4, n_radii)
    radii = [float(r) for r in radii]
    pool = np.arange(space.n)
    excluded = 0
    if exclude_boundary and not space.full_space:
        ok = space.boundary_margin() >= 2 * max(radii)
        excluded = int((~ok).sum())
        pool = pool[ok]
    cs = _pick(pool, centers, seed)
    rows = []
    for r in radii:
        m1 = space.ball_measures(cs, r)
        m2 = space.ball_measures(cs, 2 * r)
        if np.any(~(m1 > 0)):
            raise ValueError("ball of zero mass")
        for c, a, b in zip(cs, m1, m2):
            rows.append([int(c), r, float(a), float(b), float(b / a)])
    return _report("space", rows, radii, bound, excluded)


def comparability(space: SampledSpace, g: NetGraph, radii=None, centers=64,
                  seed: int = 0, exclude_boundary: bool = True) -> ComparabilityReport:
    """Extreme ratios ``m(B_V(x, r)) / mu(B_X(x, r))`` for radii at least eps."""
    eps = g.epsilon
    radii = [eps, 2 * eps, 4 * eps, 8 * eps] if radii is None else list(radii)
    for r in radii:
        if as_fraction(r) < eps:
            raise ValueError(f"radius {float(r)} below the scale floor eps={float(eps)}")
    rf = [float(r) for r in radii]
    pool = np.arange(g.n_vertices)
    if exclude_boundary:
        pool = pool[g.interior_mask(max(rf))]
    cs = _pick(pool, centers, seed)
    if len(cs) == 0:
        raise ValueError("no admissible centers")
    hops = [max_hops(r, eps) for r in radii]
    d = hop_distances(g, cs, limit=max(hops))
    table = []
    for r, rf_, h in zip(radii, rf, hops):
        mu = space.ball_measures(g.vertex_points[cs], r)
        for k, c in enumerate(cs):
            row = d[k]
            m = g.masses[(row >= 0) & (row <= h)].sum()
            table.append([int(c), rf_, float(m), float(mu[k]), float(m / mu[k])])
    ratios = np.array([t[4] for t in table])
    lo, hi = int(np.argmin(ratios)), int(np.argmax(ratios))
    return ComparabilityReport(K_lower=float(ratios[lo]), K_upper=float(ratios[hi]),
                               radii_tested=rf, scale_floor=float(eps),
                               witness_lower=(table[lo][0], table[lo][1]),
                               witness_upper=(table[hi][0], table[hi][1]), table=table)


def distortion(space: SampledSpace, g: NetGraph, pairs=2000, seed: int = 0,
               sources: int = 32, near_hops: int = 4) -> DistortionReport:
    """Compare hop distances with space distances on sampled vertex pairs.

    ``pairs="all"`` tests every vertex pair.  Otherwise up to ``sources``
    seeded source vertices are searched in full; ``pairs`` random targets are
    drawn and every vertex within ``near_hops`` hops of a source is added.
    The upper embedding bound ``d_X <= 3 d_V`` is decided exactly on every
    connected pair.
    """
    k = g.n_vertices
    if k < 2:
        raise ValueError("distortion needs at least two vertices")
    rng = np.random.default_rng(seed)
    if isinstance(pairs, str) and pairs == "all":
        src = np.arange(k)
        hop = hop_distances(g, src)
        I, J = np.triu_indices(k, 1)
        H = hop[I, J]
    else:
        src = np.sort(rng.choice(k, size=min(sources, k), replace=False))
        hop = hop_distances(g, src)
        si = rng.integers(0, len(src), size=int(pairs))
        J = rng.integers(0, k, size=int(pairs))
        # every vertex within a few hops of each source, where d_V/d_X peaks
        ns, nj = np.nonzero((hop > 0) & (hop <= near_hops))
        si = np.concatenate([si, ns])
        J = np.concatenate([J, nj])
        I = src[si]
        keep = I != J
        I, J, H = I[keep], J[keep], hop[si[keep], J[keep]]
    conn = H > 0
    total = len(H)
    I, J, H = I[conn], J[conn], H[conn]
    pi, pj = g.vertex_points[I], g.vertex_points[J]
    dx = space.distances(pi, pj)
    dv = H * g.eps
    holds = bool(space.compare(pi, pj, g.epsilon, "le", k=3 * H).all()) if len(H) else True
    if len(H) == 0:
        return DistortionReport(1.0, 0.0, 0.0, (), (), 0.0, total, holds)
    gv = dv / dx
    up = int(np.argmax(gv))
    lo = int(np.argmin(gv))
    max_gv = float(gv[up])
    max_xv = float((dx / dv).max())
    declared = None
    if space.quasiconvexity_L is not None:
        declared = bool(max_gv <= (space.quasiconvexity_L + 1) * (1 + 1e-12))
    return DistortionReport(
        L_estimate=max(max_gv - 1.0, 1.0),
        max_graph_over_space=max_gv,
        max_space_over_graph=max_xv,
        max_ratio_pair=(int(I[up]), int(J[up])),
        min_ratio_pair=(int(I[lo]), int(J[lo])),
        connected_fraction=float(len(H) / total) if total else 0.0,
        pairs_tested=int(len(H)),
        upper_bound_holds=holds,
        declared_L_consistent=declared,
    )
