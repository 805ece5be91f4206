"""Pointed Gromov-Hausdorff conditions and multiscale uniformity reports.

Levels are one-complexes in ``"space"`` metric mode.  The comparison map
``f_i`` sends every complex point to its nearest endpoint.  A level passes
when

1. ``f_i(q_i) = q``,
2. ``|d(f_i(x), f_i(y)) - d_i(x, y)| < eta`` on sampled pairs of ``B(q_i, r)``,
3. the sampled ball ``B(q, r - eta)`` lies in the ``eta``-neighborhood of
   ``f_i(B(q_i, r))``, with the sample's own covering radius added.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from .analysis import comparability, distortion, estimate_doubling, log_radii
from .graph import NetGraph, build_graph, euclidean_ball_vertices
from .net import hausdorff_gap, nested_chain
from .onecomplex import ComplexPoint, OneComplex, build_complex, complex_distance
from .poincare import estimate_constant_lower
from .spaces import BallSpec, SampledSpace


def nearest_vertex_map(c: OneComplex, P: ComplexPoint) -> int:
    """Endpoint within ``eps/2`` of ``P``; exact midpoints go to the lower index."""
    if P.edge is None:
        return int(P.vertex)
    a, b = c.edges[P.edge]
    return int(a) if P.t <= c.eps / 2 else int(b)


@dataclass(frozen=True)
class GHLevel:
    level: int
    epsilon: float
    condition1_pass: bool
    max_metric_defect: float
    vertex_pair_defect: float
    condition2_pass: bool
    cover_defect: float
    condition3_pass: bool
    defect_bound: float
    within_bound: bool
    pairs: int

    @property
    def passed(self) -> bool:
        return self.condition1_pass and self.condition2_pass and self.condition3_pass


@dataclass(frozen=True)
class GHCheckReport:
    r: float
    eta: float
    L: float
    i0: int | None
    levels: list

    def to_dict(self) -> dict:
        return {"r": self.r, "eta": self.eta, "L": self.L, "i0": self.i0,
                "levels": [dict(vars(lv), passed=lv.passed) for lv in self.levels]}


def _sample_ball_points(c: OneComplex, qv: int, Dq: np.ndarray, r: float, n: int,
                        rng: np.random.Generator):
    """Random edge points of the complex ball ``B(q, r)``: (edge, t) arrays."""
    e = c.edges
    eps = c.eps
    cand = np.flatnonzero(np.minimum(Dq[e[:, 0]], Dq[e[:, 1]]) < r)
    if len(cand) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    E = rng.choice(cand, size=4 * n)
    T = rng.uniform(0, eps, size=4 * n)
    T = np.where((T > 0) & (T < eps), T, eps / 2)
    d = np.minimum(Dq[e[E, 0]] + T, Dq[e[E, 1]] + eps - T)
    keep = np.flatnonzero(d < r)[:n]
    return E[keep], T[keep]


def _pair_distances(c: OneComplex, E1, T1, E2, T2) -> np.ndarray:
    """Space-mode complex distance between edge points, vectorized."""
    g = c.base
    sp = g.space
    eps = c.eps
    e = c.edges
    ends1 = [(e[E1, 0], T1), (e[E1, 1], eps - T1)]
    ends2 = [(e[E2, 0], T2), (e[E2, 1], eps - T2)]
    best = np.full(len(E1), np.inf)
    for u, ou in ends1:
        for w, ow in ends2:
            d = sp.distances(g.vertex_points[u], g.vertex_points[w])
            d = np.where(g.components[u] == g.components[w], d, np.inf)
            best = np.minimum(best, d + ou + ow)
    same = E1 == E2
    best[same] = np.minimum(best[same], np.abs(T1[same] - T2[same]))
    return best


def gh_condition_check(levels: list, space: SampledSpace, q: int, r: float, eta: float,
                       pairs: int = 500, seed: int = 0, L: float | None = None) -> GHCheckReport:
    """Check the three pointed GH conditions at every level.

    Parameters
    ----------
    levels : list of OneComplex
        Space-mode complexes of a nested chain over ``space``.
    q : int
        Base point as a space index; it must be a vertex at every level.
    L : float, optional
        Distortion used for the reported bound ``2 L eps``; measured from
        the finest level when omitted.
    """
    if not 0 < eta < r:
        raise ValueError("need 0 < eta < r")
    rng = np.random.default_rng(seed)
    if L is None:
        L = distortion(space, levels[-1].base, pairs=pairs, seed=seed).bilipschitz
    ball_pts = np.flatnonzero(space.distances_from(q) < r - eta)
    records = []
    for i, c in enumerate(levels):
        if c.mode != "space":
            raise ValueError("levels must use the space metric")
        g = c.base
        try:
            qv = g.vertex_of(q)
        except KeyError:
            raise ValueError("not a nested embedding: base point missing at level %d" % i) from None
        eps = c.eps
        cond1 = int(g.vertex_points[nearest_vertex_map(c, c.vertex(qv))]) == int(q)
        Dq = c.vertex_distances([qv])[0]
        E1, T1 = _sample_ball_points(c, qv, Dq, r, pairs, rng)
        E2, T2 = _sample_ball_points(c, qv, Dq, r, pairs, rng)
        k = min(len(E1), len(E2))
        E1, T1, E2, T2 = E1[:k], T1[:k], E2[:k], T2[:k]
        dG = _pair_distances(c, E1, T1, E2, T2)
        e = c.edges
        f1 = np.where(T1 <= eps / 2, e[E1, 0], e[E1, 1])
        f2 = np.where(T2 <= eps / 2, e[E2, 0], e[E2, 1])
        dX = g.space.distances(g.vertex_points[f1], g.vertex_points[f2])
        defect = float(np.abs(dX - dG).max()) if k else 0.0
        # vertex pairs: d_G equals d_X by definition
        inball = np.flatnonzero(Dq < r)
        vdef = 0.0
        for x, y in zip(rng.choice(inball, size=64), rng.choice(inball, size=64)):
            dg = complex_distance(c, c.vertex(int(x)), c.vertex(int(y)))
            dx = g.space.distance(int(g.vertex_points[x]), int(g.vertex_points[y]))
            vdef = max(vdef, abs(dg - dx))
        cond2 = max(defect, vdef) < eta
        # image of the ball: vertices in it, or next to a vertex reaching it within eps/2
        image = Dq < r
        nb_close = Dq[e[:, 0]] + eps / 2 < r
        image[e[nb_close, 1]] = True
        nb_close = Dq[e[:, 1]] + eps / 2 < r
        image[e[nb_close, 0]] = True
        img_pts = g.space.points[g.vertex_points[np.flatnonzero(image)]]
        if len(ball_pts):
            dist, _ = cKDTree(img_pts).query(space.points[ball_pts])
            cover = float(dist.max()) + space.covering_radius
        else:
            cover = space.covering_radius
        cond3 = cover < eta
        bound = 2 * L * eps
        records.append(GHLevel(level=i, epsilon=eps, condition1_pass=bool(cond1),
                               max_metric_defect=defect, vertex_pair_defect=vdef,
                               condition2_pass=bool(cond2), cover_defect=cover,
                               condition3_pass=bool(cond3), defect_bound=bound,
                               within_bound=bool(defect <= bound), pairs=int(k)))
    i0 = None
    for i in range(len(records) - 1, -1, -1):
        if records[i].passed:
            i0 = i
        else:
            break
    return GHCheckReport(r=float(r), eta=float(eta), L=float(L), i0=i0, levels=records)


# multiscale ----------------------------------------------------------------

CONDITIONS = ("hausdorff", "distortion", "comparability", "doubling", "poincare")


@dataclass(frozen=True)
class LevelRecord:
    level: int
    epsilon: float
    n_vertices: int
    H: float
    L: float
    K: float
    doubling: float
    pi_constant: float
    pi_disconnected: bool
    ball_masses: dict

    def value(self, cond: str) -> float:
        return {"hausdorff": self.H, "distortion": self.L, "comparability": self.K,
                "doubling": self.doubling, "poincare": self.pi_constant}[cond]


@dataclass(frozen=True)
class MultiscaleReport:
    """Per-level constants and a uniformity verdict per condition.

    A condition is uniform when every level's constant is finite and at most
    ``factor`` times the median over levels (and below any absolute cap);
    the Hausdorff condition instead asks for ``H_i`` nonincreasing with
    ``H_i`` below a fixed multiple of ``eps_i``.
    """

    levels: list
    verdicts: dict
    constants: dict
    witnesses: dict
    factor: float
    caps: dict = field(default_factory=dict)
    certified_levels: tuple = ()

    def to_dict(self) -> dict:
        return {"levels": [vars(lv) for lv in self.levels], "verdicts": self.verdicts,
                "constants": self.constants, "witnesses": self.witnesses,
                "factor": self.factor, "caps": self.caps,
                "certified_levels": list(self.certified_levels),
                "all_uniform": all(self.verdicts.values())}


def uniform_verdicts(levels: list, factor: float = 4.0, caps: dict | None = None):
    """Recompute verdicts, max constants and failing-level witnesses from records."""
    caps = caps or {}
    verdicts, consts, wit = {}, {}, {}
    for cond in CONDITIONS:
        vals = np.array([lv.value(cond) for lv in levels], dtype=float)
        consts[cond] = float(vals.max())
        if cond == "hausdorff":
            eps = np.array([lv.epsilon for lv in levels])
            ok = np.isfinite(vals) & (vals <= 2 * eps)
            mono = np.concatenate([[True], vals[1:] <= vals[:-1] * (1 + 1e-12)])
            ok &= mono
        else:
            med = float(np.median(vals[np.isfinite(vals)])) if np.isfinite(vals).any() else math.inf
            ok = np.isfinite(vals) & (vals <= factor * med)
            if cond in caps:
                ok &= vals <= caps[cond]
        verdicts[cond] = bool(ok.all())
        bad = np.flatnonzero(~ok)
        wit[cond] = None if len(bad) == 0 else int(levels[bad[0]].level)
    return verdicts, consts, wit


def build_dyadic_chain(space: SampledSpace, levels: int, epsilon0, seed: int = 0,
                       order: str | None = None, mass_scale: dict | None = None) -> list[NetGraph]:
    """Graphs of nested nets at ``epsilon0 / 2**i``.

    ``mass_scale`` multiplies the masses of chosen levels (to inject faults).
    """
    if order is None:
        order = "lattice" if space.is_lattice else "shuffle"
    nets = nested_chain(space, epsilon0, levels, seed, order)
    graphs = []
    for i, net in enumerate(nets):
        g = build_graph(space, net)
        if mass_scale and i in mass_scale:
            g = replace(g, masses=g.masses * float(mass_scale[i]))
        graphs.append(g)
    return graphs


def assess_level(space: SampledSpace, g: NetGraph, level: int, q: int, p: float, lam: float,
                 seed: int, centers: int, mass_radii=()) -> LevelRecord:
    eps = g.eps
    H = hausdorff_gap(space, g.net) + space.covering_radius
    L = distortion(space, g, pairs=1000, seed=seed).bilipschitz
    comp = comparability(space, g, radii=[g.epsilon * k for k in (1, 2, 4)], centers=centers,
                         seed=seed)
    dbl = estimate_doubling(g, centers=centers, radii=log_radii(eps, 2 * eps, 6), seed=seed)
    qv = g.vertex_of(q)
    est = estimate_constant_lower(g, BallSpec(qv, 2 * eps), lam, p, suite_size=8, seed=seed,
                                  ascent_steps=50, with_oracle=False, with_upper=False)
    masses = {}
    for R in mass_radii:
        vs = euclidean_ball_vertices(g, qv, R)
        masses[str(R)] = float(g.masses[vs].sum())
    return LevelRecord(level=level, epsilon=eps, n_vertices=g.n_vertices, H=float(H), L=float(L),
                       K=float(comp.K), doubling=float(dbl.max_ratio),
                       pi_constant=float(est.C_lower), pi_disconnected=bool(est.disconnected),
                       ball_masses=masses)


def multiscale_report(space: SampledSpace, levels: int, epsilon0, seeds: int = 0, p: float = 1.0,
                      lam: float = 1.0, q: int | None = None, centers: int = 16,
                      factor: float = 4.0, caps: dict | None = None,
                      mass_scale: dict | None = None) -> MultiscaleReport:
    """Build the nested chain and assess the five conditions at every level.

    ``q`` defaults to the level-0 vertex nearest the origin.  Ball masses of
    Euclidean balls of radius ``epsilon0`` and ``2 epsilon0`` around ``q`` are
    tracked across levels.
    """
    if levels < 2:
        raise ValueError("multiscale report needs at least two levels")
    graphs = build_dyadic_chain(space, levels, epsilon0, seeds, mass_scale=mass_scale)
    if q is None:
        g0 = graphs[0]
        pts = space.points[g0.vertex_points]
        q = int(g0.vertex_points[np.argmin(np.linalg.norm(pts, axis=1))])
    e0 = float(epsilon0)
    recs = [assess_level(space, g, i, q, p, lam, seeds, centers, (e0, 2 * e0))
            for i, g in enumerate(graphs)]
    verdicts, consts, wit = uniform_verdicts(recs, factor, caps)
    return MultiscaleReport(levels=recs, verdicts=verdicts, constants=consts, witnesses=wit,
                            factor=factor, caps=dict(caps or {}),
                            certified_levels=(0, levels - 1))


def chain_complexes(graphs: list[NetGraph]) -> list[OneComplex]:
    return [build_complex(g, "space") for g in graphs]
