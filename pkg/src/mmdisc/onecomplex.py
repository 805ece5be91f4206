"""One-complex extension of a net graph.

Every edge becomes an interval of length ``eps``.  Two metrics are offered:

* ``"graph"``: vertex distances are hop distances ``d_V``;
* ``"space"``: vertex distances are the ambient ``d_X``.

Interior points are reached through either endpoint, so a distance is the
minimum over the four endpoint routings plus the direct path when both
points share an edge.  The measure of a piece ``U`` of edge ``I = [a, b]`` is
``length(U) / eps * (m(a) + m(b))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .graph import NetGraph, hop_distances
from .poincare import PoincareEstimate, estimate_constant_lower
from .spaces import BallSpec

MODES = ("graph", "space")
NODES_PER_EDGE = 8


@dataclass(frozen=True)
class ComplexPoint:
    """A vertex (``edge is None``) or the point at parameter ``t`` on an edge.

    ``t`` is measured from the lower-index endpoint and lies strictly inside
    ``(0, eps)`` for canonical edge points.
    """

    vertex: int | None = None
    edge: int | None = None
    t: float = 0.0

    def label(self) -> str:
        return f"v{self.vertex}" if self.edge is None else f"e{self.edge}@{self.t!r}"


@dataclass(frozen=True, eq=False)
class OneComplex:
    """Edges of ``base`` as intervals, with a graph- or space-derived metric."""

    base: NetGraph
    mode: str = "graph"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown metric mode {self.mode!r}")
        if self.mode == "space" and self.base.space is None:
            raise ValueError("space mode needs a graph built from a space")
        object.__setattr__(self, "edges", self.base.edges())

    @property
    def eps(self) -> float:
        return self.base.eps

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def vertex(self, v: int) -> ComplexPoint:
        if not 0 <= v < self.base.n_vertices:
            raise IndexError("vertex out of range")
        return ComplexPoint(vertex=int(v))

    def point(self, edge: int, t: float) -> ComplexPoint:
        """Canonical point at parameter ``t`` (from the lower endpoint)."""
        if not 0 <= edge < self.n_edges:
            raise IndexError("edge out of range")
        if not 0 <= t <= self.eps:
            raise ValueError("t must lie in [0, eps]")
        a, b = self.edges[edge]
        if t == 0:
            return ComplexPoint(vertex=int(a))
        if t == self.eps:
            return ComplexPoint(vertex=int(b))
        return ComplexPoint(edge=int(edge), t=float(t))

    def point_between(self, a: int, b: int, t_from_a: float) -> ComplexPoint:
        """Point at distance ``t_from_a`` from ``a`` along edge ``{a, b}``."""
        lo, hi = min(a, b), max(a, b)
        e = self.edge_index(lo, hi)
        t = t_from_a if a == lo else self.eps - t_from_a
        return self.point(e, t)

    def edge_index(self, a: int, b: int) -> int:
        lo, hi = min(a, b), max(a, b)
        pos = np.searchsorted(self.edges[:, 0], lo)
        end = np.searchsorted(self.edges[:, 0], lo, side="right")
        k = pos + np.searchsorted(self.edges[pos:end, 1], hi)
        if k >= end or self.edges[k, 1] != hi:
            raise KeyError(f"no edge between {a} and {b}")
        return int(k)

    def endpoints(self, P: ComplexPoint) -> list[tuple[int, float]]:
        """Endpoint vertices of ``P`` with the offset to reach each."""
        if P.edge is None:
            return [(int(P.vertex), 0.0)]
        a, b = self.edges[P.edge]
        return [(int(a), P.t), (int(b), self.eps - P.t)]

    def vertex_distances(self, sources, limit: float | None = None) -> np.ndarray:
        """Vertex-to-vertex distances from each source (``inf`` if unreachable)."""
        src = np.asarray(sources, dtype=np.int64)
        if self.mode == "graph":
            lim = None if limit is None else int(math.floor(limit / self.eps)) + 1
            h = hop_distances(self.base, src, limit=lim)
            return np.where(h >= 0, h * self.eps, np.inf)
        g = self.base
        sp = g.space
        out = np.empty((len(src), g.n_vertices))
        allv = np.arange(g.n_vertices)
        for k, s in enumerate(src):
            d = sp.distances(np.full(g.n_vertices, g.vertex_points[s]), g.vertex_points[allv])
            d[g.components != g.components[s]] = np.inf
            out[k] = d
        return out

    def distances_from(self, P: ComplexPoint, limit: float | None = None) -> np.ndarray:
        """Distance from ``P`` to every vertex."""
        ends = self.endpoints(P)
        D = self.vertex_distances([v for v, _ in ends], limit)
        return np.min(D + np.array([o for _, o in ends])[:, None], axis=0)

    def random_point(self, rng: np.random.Generator, vertex_prob: float = 0.1) -> ComplexPoint:
        if self.n_edges == 0 or rng.random() < vertex_prob:
            return self.vertex(int(rng.integers(self.base.n_vertices)))
        e = int(rng.integers(self.n_edges))
        t = float(rng.uniform(0, self.eps))
        return self.point(e, t) if 0 < t < self.eps else self.point(e, self.eps / 2)


def build_complex(g: NetGraph, mode: str = "graph") -> OneComplex:
    """One-complex over ``g`` in ``"graph"`` or ``"space"`` metric mode."""
    return OneComplex(g, mode)


def complex_distance(c: OneComplex, P: ComplexPoint, Q: ComplexPoint) -> float:
    """Minimum over the endpoint routings, plus the shortcut inside a shared edge."""
    best = math.inf
    if P.edge is not None and P.edge == Q.edge:
        best = abs(P.t - Q.t)
    if P.edge is None and Q.edge is None and P.vertex == Q.vertex:
        return 0.0
    pe, qe = c.endpoints(P), c.endpoints(Q)
    D = c.vertex_distances([v for v, _ in pe])
    for k, (_, op) in enumerate(pe):
        for w, oq in qe:
            best = min(best, D[k, w] + op + oq)
    return float(best)


@dataclass(frozen=True, eq=False)
class ComplexMeasure:
    """Edge measure ``length(U)/eps * (m(a) + m(b))`` on a one-complex."""

    complex: OneComplex

    @property
    def edge_weights(self) -> np.ndarray:
        m = self.complex.base.masses
        e = self.complex.edges
        return m[e[:, 0]] + m[e[:, 1]]

    def edge_mass(self, edge: int) -> float:
        return float(self.edge_weights[edge])

    def measure(self, pieces) -> float:
        """Measure of a union of ``(edge, s0, s1)`` sub-intervals."""
        by_edge: dict[int, list] = {}
        for e, s0, s1 in pieces:
            by_edge.setdefault(int(e), []).append((max(0.0, s0), min(self.complex.eps, s1)))
        w = self.edge_weights
        total = 0.0
        for e, ivs in by_edge.items():
            total += _union_length(ivs) / self.complex.eps * w[e]
        return total

    def ball_intervals(self, P: ComplexPoint, r: float, D: np.ndarray | None = None):
        """Per-edge disjoint intervals of the open ball ``B(P, r)``."""
        c = self.complex
        eps = c.eps
        D = c.distances_from(P, limit=r + eps) if D is None else D
        e = c.edges
        alpha = np.clip(r - D[e[:, 0]], 0.0, eps)
        beta = np.clip(r - D[e[:, 1]], 0.0, eps)
        out = {}
        for k in np.flatnonzero((alpha > 0) | (beta > 0) | (np.arange(len(e)) == (P.edge if P.edge is not None else -1))):
            ivs = []
            if alpha[k] > 0:
                ivs.append((0.0, float(alpha[k])))
            if beta[k] > 0:
                ivs.append((eps - float(beta[k]), eps))
            if P.edge is not None and k == P.edge:
                ivs.append((max(0.0, P.t - r), min(eps, P.t + r)))
            merged = _merge(ivs)
            if merged:
                out[int(k)] = merged
        return out


def _merge(ivs):
    ivs = sorted(i for i in ivs if i[1] > i[0])
    out = []
    for lo, hi in ivs:
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def _union_length(ivs) -> float:
    return sum(hi - lo for lo, hi in _merge(ivs))


def complex_ball_mass(cm: ComplexMeasure, center: ComplexPoint, r: float) -> float:
    """``m_bar(B(center, r))`` accumulated edge by edge in closed form.

    On an edge ``[a, b]`` the ball is ``[0, r - D(a)) u (eps - (r - D(b)), eps]``
    (plus ``(t - r, t + r)`` on the center's own edge), where ``D`` is the
    distance from the center to the endpoints.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    c = cm.complex
    eps = c.eps
    D = c.distances_from(center, limit=r + eps)
    e = c.edges
    alpha = np.clip(r - D[e[:, 0]], 0.0, eps)
    beta = np.clip(r - D[e[:, 1]], 0.0, eps)
    length = np.minimum(alpha + beta, eps)
    w = cm.edge_weights
    if center.edge is not None:
        k = center.edge
        ivs = [(0.0, alpha[k]), (eps - beta[k], eps), (max(0.0, center.t - r), min(eps, center.t + r))]
        length = length.copy()
        length[k] = _union_length(ivs)
    total = float(np.dot(length, w) / eps)
    if total <= 0 and c.n_edges == 0:
        raise ValueError("complex has no edges")
    return total


def complex_doubling(cm: ComplexMeasure, centers, radii, seed: int, exclude_boundary: bool,
                     n_radii: int = 12) -> list:
    """Rows ``(center, r, m(B_r), m(B_2r), ratio)`` for sampled complex points."""
    c = cm.complex
    g = c.base
    eps = c.eps
    if radii is None:
        radii = [float(x) for x in np.geomspace(eps / 8, 8 * eps, n_radii)]
    rng = np.random.default_rng(seed)
    if np.ndim(centers) == 0:
        ok = g.interior_mask(2 * max(radii)) if exclude_boundary else np.ones(g.n_vertices, bool)
        pts = []
        tries = 0
        while len(pts) < int(centers) and tries < 100 * int(centers) + 100:
            tries += 1
            P = c.random_point(rng)
            if all(ok[v] for v, _ in c.endpoints(P)):
                pts.append(P)
    else:
        pts = list(centers)
    rows = []
    for P in pts:
        for r in radii:
            m1 = complex_ball_mass(cm, P, r)
            m2 = complex_ball_mass(cm, P, 2 * r)
            if not m1 > 0:
                raise ValueError("ball of zero mass")
            rows.append([P.label(), float(r), m1, m2, m2 / m1])
    return rows


# energies ------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyComparison:
    """Linear interpolant energy against random perturbations with equal ends."""

    p: float
    linear_energy: float
    edges_tested: int
    perturbations: int
    violations: int
    min_excess: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _pl_energy_scaled(s: list, vals: list, p: int) -> Fraction:
    """``sum |dv|^p / ds^(p-1)``, the edge energy without its mass factor."""
    total = Fraction(0)
    for k in range(len(s) - 1):
        ds = s[k + 1] - s[k]
        dv = abs(vals[k + 1] - vals[k])
        if ds == 0:
            continue
        total += dv**p / ds ** (p - 1)
    return total


def linear_extension_energy(c: OneComplex, u_tilde, p: int = 2, perturbations: int = 20,
                            seed: int = 0, max_edges: int | None = 2000) -> EnergyComparison:
    """Compare each edge's linear interpolant energy with perturbed interpolants.

    The energy of a piecewise-linear ``u`` on edge ``I`` is
    ``sum |slope|^p * length / eps * (m(a) + m(b))``.  Perturbations keep the
    endpoint values and add 1 to 6 random interior nodes.  Comparisons are
    exact in rationals; the common mass factor cancels.
    """
    if int(p) != p or p < 1:
        raise ValueError("p must be a positive integer")
    p = int(p)
    g = c.base
    v = u_tilde.values if hasattr(u_tilde, "values") else np.asarray(u_tilde, dtype=np.float64)
    rng = np.random.default_rng(seed)
    E = c.n_edges
    edges = np.arange(E)
    if max_edges is not None and E > max_edges:
        edges = np.sort(rng.choice(E, size=max_edges, replace=False))
    w = ComplexMeasure(c).edge_weights
    eps_f = Fraction(c.eps)
    lin_total = 0.0
    violations = 0
    min_excess = math.inf
    for e in edges.tolist():
        a, b = c.edges[e]
        ua, ub = Fraction(float(v[a])), Fraction(float(v[b]))
        lin = abs(ub - ua) ** p / eps_f ** (p - 1)
        lin_total += float(lin) / c.eps * w[e]
        scale = float(abs(ub - ua)) + 1.0
        for _ in range(perturbations):
            k = int(rng.integers(1, 7))
            s_int = np.sort(rng.uniform(0, c.eps, size=k))
            base = float(ua) + (float(ub) - float(ua)) * s_int / c.eps
            vals_int = base + rng.normal(scale=scale, size=k) * rng.choice([0.0, 1e-6, 1.0], size=k)
            s = [Fraction(0)] + [Fraction(float(x)) for x in s_int] + [eps_f]
            vals = [ua] + [Fraction(float(x)) for x in vals_int] + [ub]
            pert = _pl_energy_scaled(s, vals, p)
            excess = pert - lin
            if excess < 0:
                violations += 1
            min_excess = min(min_excess, float(excess))
    return EnergyComparison(p=p, linear_energy=float(lin_total), edges_tested=len(edges),
                            perturbations=perturbations, violations=violations,
                            min_excess=min_excess)


# Poincare on the complex ---------------------------------------------------

def _abs_integral(L, a, b):
    """``int_0^L |linear from a to b|``, elementwise."""
    same = a * b >= 0
    denom = np.where(same, 1.0, np.abs(a) + np.abs(b))
    return np.where(same, L * np.abs(a + b) / 2, L * (a * a + b * b) / (2 * denom))


class _ComplexBall:
    """Quadrature pieces of a ball and its inflation for nodal functions."""

    def __init__(self, cm: ComplexMeasure, P: ComplexPoint, r: float, lam: float):
        c = cm.complex
        self.c, self.r, self.eps = c, float(r), c.eps
        h = c.eps / (NODES_PER_EDGE - 1)
        self.h = h
        D = c.distances_from(P, limit=lam * r + c.eps)
        self.ball = self._pieces(cm, P, r, D, h)
        self.lball = self._pieces(cm, P, lam * r, D, h)
        self.edges = np.unique(np.concatenate([self.ball[0], self.lball[0]]))

    def _pieces(self, cm, P, r, D, h):
        ivs = cm.ball_intervals(P, r, D)
        w = cm.edge_weights
        E, S, lo, hi, dens = [], [], [], [], []
        for e, lst in ivs.items():
            for a, b in lst:
                for k in range(NODES_PER_EDGE - 1):
                    s0, s1 = k * h, (k + 1) * h
                    x0, x1 = max(a, s0), min(b, s1)
                    if x1 > x0:
                        E.append(e)
                        S.append(k)
                        lo.append(x0 - s0)
                        hi.append(x1 - s0)
                        dens.append(w[e] / self.eps)
        return (np.array(E, dtype=np.int64), np.array(S, dtype=np.int64), np.array(lo),
                np.array(hi), np.array(dens))

    def sides(self, nodes: np.ndarray, p: float) -> tuple[float, float]:
        """``(lhs, rhs)`` for nodal values ``nodes`` of shape (n_edges, 8)."""
        E, S, lo, hi, dens = self.ball
        v0, v1 = nodes[E, S], nodes[E, S + 1]
        slope = (v1 - v0) / self.h
        f_lo, f_hi = v0 + slope * lo, v0 + slope * hi
        L = hi - lo
        mass = float(np.dot(dens, L))
        mean = float(np.dot(dens, L * (f_lo + f_hi) / 2)) / mass
        lhs = float(np.dot(dens, _abs_integral(L, f_lo - mean, f_hi - mean))) / mass
        E2, S2, lo2, hi2, dens2 = self.lball
        sl2 = np.abs(nodes[E2, S2 + 1] - nodes[E2, S2]) / self.h
        L2 = hi2 - lo2
        mass2 = float(np.dot(dens2, L2))
        rhs = self.r * (float(np.dot(dens2, L2 * sl2**p)) / mass2) ** (1.0 / p)
        return lhs, rhs


def complex_pi_check(c: OneComplex, cm: ComplexMeasure, center: ComplexPoint, r: float,
                     p: float = 1.0, lam: float = 1.0, suite_size: int = 16,
                     seed: int = 0) -> PoincareEstimate:
    """Best Poincare ratio on a complex ball over piecewise-linear test functions.

    Test functions are given by their values at 8 equispaced nodes per edge
    and integrated exactly on each linear piece.  The suite holds linear
    interpolants of vertex functions (coordinates, hop distances, random
    signs), the same with random interior bumps that vanish at vertices, and
    fully random nodal functions.  The result's ``suite_ratios`` also records
    the base-graph constant on the matching vertex ball and the factor
    between the two.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    g = c.base
    rng = np.random.default_rng(seed)
    prob = _ComplexBall(cm, center, r, lam)
    E = c.edges
    s = np.linspace(0.0, 1.0, NODES_PER_EDGE)

    def interp(vals):
        return vals[E[:, 0], None] * (1 - s) + vals[E[:, 1], None] * s

    suite = {"const": np.zeros((c.n_edges, NODES_PER_EDGE))}
    vert_funcs = {}
    if g.coords is not None:
        for j in range(g.coords.shape[1]):
            vert_funcs[f"coord{j}"] = g.coords[:, j]
    ends = c.endpoints(center)
    vert_funcs["hop"] = np.maximum(hop_distances(g, ends[0][0]), 0).astype(float)
    for t in range(suite_size):
        vert_funcs[f"sign{t}"] = rng.choice([-1.0, 1.0], size=g.n_vertices)
    bump = np.sin(np.pi * s)
    for name, vals in vert_funcs.items():
        suite[name] = interp(vals)
        amp = rng.normal(size=(c.n_edges, 1)) * c.eps
        suite[name + "+bump"] = interp(vals) + amp * bump
    for t in range(suite_size):
        vals = rng.normal(size=g.n_vertices)
        nodes = interp(vals)
        nodes[:, 1:-1] += rng.normal(size=(c.n_edges, NODES_PER_EDGE - 2))
        suite[f"random{t}"] = nodes
    ratios = {}
    for name, nodes in suite.items():
        lhs, rhs = prob.sides(nodes, p)
        ratios[name] = 0.0 if lhs == 0 else (math.inf if rhs == 0 else lhs / rhs)
    best_name = max(ratios, key=ratios.get)
    # base-graph constant on the vertex ball around the nearest endpoint
    near = min(ends, key=lambda x: x[1])[0]
    base = estimate_constant_lower(g, BallSpec(int(near), max(r, g.eps * 1.5)), lam, p,
                                   suite_size=suite_size, seed=seed, ascent_steps=0,
                                   with_oracle=False, with_upper=False)
    ratios["base_graph_constant"] = base.C_lower
    ratios["factor_to_base"] = (ratios[best_name] / base.C_lower) if base.C_lower > 0 else math.inf
    return PoincareEstimate(p=float(p), lam=float(lam), ball=BallSpec(int(near), float(r)),
                            C_lower=float(ratios[best_name]), C_exact=None,
                            C_upper_heuristic=None, argmax_function=None,
                            ball_size=len(prob.ball[0]), lambda_ball_size=len(prob.lball[0]),
                            suite_ratios=ratios, seed=seed)


def mode_ratio_check(c_graph: OneComplex, c_space: OneComplex, pairs: int = 1000,
                     seed: int = 0) -> dict:
    """Ratios ``d_G / d~_G`` on random point pairs of the same underlying graph."""
    if c_graph.base is not c_space.base:
        raise ValueError("both complexes must share the base graph")
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(pairs):
        P, Q = c_graph.random_point(rng), c_graph.random_point(rng)
        dg = complex_distance(c_graph, P, Q)
        ds = complex_distance(c_space, P, Q)
        if dg == 0 or not math.isfinite(dg):
            continue
        ratios.append(ds / dg)
    ratios = np.array(ratios)
    return {"pairs": int(len(ratios)), "min_ratio": float(ratios.min()),
            "max_ratio": float(ratios.max())}
