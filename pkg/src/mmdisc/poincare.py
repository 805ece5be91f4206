"""Discrete gradients and the discrete (1, p)-Poincare inequality on graph balls.

For a ball ``B`` of radius ``r`` and its inflation ``lam * B`` the two sides
are

    lhs = mean_B |u - u_B| dm,    rhs = r * (mean_{lam B} |grad u|^p dm)^(1/p)

with ``|grad u|(a) = sum_{b ~ a} |u(b) - u(a)| / eps``.  The best constant is
estimated from below with a suite of test functions and coordinate ascent,
computed exactly at ``p = 1`` on tiny balls, and bounded from above at
``p = 2`` through a quadratic relaxation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import linalg
from scipy.sparse import csgraph

from ._util import as_fraction
from .graph import NetGraph, VertexFunction, graph_ball, hop_distances, max_hops
from .spaces import BallSpec

TINY_LIMIT = 6


def _values(g: NetGraph, u) -> np.ndarray:
    if isinstance(u, VertexFunction):
        return u.values
    v = np.asarray(u, dtype=np.float64)
    if v.shape != (g.n_vertices,):
        raise ValueError("one value per vertex required")
    return v


def gradient_all(g: NetGraph, u) -> np.ndarray:
    """``|grad u|`` at every vertex."""
    v = _values(g, u)
    rows = np.repeat(np.arange(g.n_vertices), g.degrees)
    diff = np.abs(v[g.indices] - v[rows])
    return np.bincount(rows, weights=diff, minlength=g.n_vertices) / g.eps


def discrete_gradient(u: VertexFunction, a: int) -> float:
    """``sum_{b ~ a} |u(b) - u(a)| / eps``; zero at isolated vertices."""
    g = u.graph
    nb = g.neighbors(a)
    return float(np.abs(u.values[nb] - u.values[a]).sum() / g.eps)


def _double_mean(x: np.ndarray, m: np.ndarray) -> float:
    """``sum_{i,j} m_i m_j |x_i - x_j| / M^2`` in O(n log n)."""
    order = np.argsort(x, kind="stable")
    xs, ms = x[order], m[order]
    cm = np.cumsum(ms) - ms
    cmx = np.cumsum(ms * xs) - ms * xs
    total = float(np.sum(ms * (xs * cm - cmx)))
    M = ms.sum()
    return 2.0 * total / (M * M)


@dataclass(frozen=True)
class PISides:
    """Both sides of the discrete Poincare inequality on one ball.

    ``rhs_sum_form`` uses the inner-sum gradient
    ``(sum_{b ~ a} |u(b) - u(a)|^p)^(1/p) / eps`` instead of ``|grad u|``.
    In exact mode the sides are Fractions except ``rhs`` for ``p > 1``.
    """

    lhs: float | Fraction
    lhs_double: float | Fraction
    rhs: float | Fraction
    grad_mean_p: float | Fraction
    rhs_sum_form: float | Fraction
    radius: float | Fraction
    p: float
    violated: bool = False

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return math.inf if self.lhs > 0 else 0.0
        return float(self.lhs) / float(self.rhs)


def _ball_sets(g: NetGraph, ball: BallSpec, lam: float) -> tuple[np.ndarray, np.ndarray]:
    if lam < 1:
        raise ValueError("lambda must be at least 1")
    B = graph_ball(g, ball)
    LB = graph_ball(g, BallSpec(ball.center, lam * ball.radius))
    return B, LB


def pi_sides(g: NetGraph, ball: BallSpec, lam: float, p: float, u, exact: bool = False) -> PISides:
    """Evaluate ``lhs``, the double mean and ``rhs`` for ``u`` on ``ball``.

    With ``exact=True`` every quantity is accumulated in rational arithmetic
    from the exact binary values of ``u``, the masses and ``eps``.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    v = _values(g, u)
    B, LB = _ball_sets(g, ball, lam)
    if exact:
        return _pi_sides_exact(g, B, LB, ball.radius, p, v)
    mB = g.masses[B]
    ref = v[ball.center]
    x = v[B] - ref
    uB = float(np.dot(mB, x) / mB.sum())
    lhs = float(np.dot(mB, np.abs(x - uB)) / mB.sum())
    lhs_double = _double_mean(x, mB)
    rows = np.concatenate([np.full(g.degrees[a], a) for a in LB]) if len(LB) else np.zeros(0, int)
    cols = np.concatenate([g.neighbors(a) for a in LB]) if len(LB) else np.zeros(0, int)
    diff = np.abs(v[cols] - v[rows])
    pos = np.searchsorted(LB, rows)
    grad = np.bincount(pos, weights=diff, minlength=len(LB)) / g.eps
    inner = np.bincount(pos, weights=diff**p, minlength=len(LB)) / g.eps**p
    mL = g.masses[LB]
    gm = float(np.dot(mL, grad**p) / mL.sum())
    r = float(ball.radius)
    rhs = r * gm ** (1.0 / p)
    rhs_sum = r * float(np.dot(mL, inner) / mL.sum()) ** (1.0 / p)
    return PISides(lhs, lhs_double, rhs, gm, rhs_sum, r, p, violated=(rhs == 0 and lhs > 0))


def _pi_sides_exact(g, B, LB, radius, p, v) -> PISides:
    F = Fraction
    eps = g.epsilon
    val = {int(i): F(float(v[i])) for i in set(B.tolist()) | set(LB.tolist())}
    for a in LB:
        for b in g.neighbors(a):
            val.setdefault(int(b), F(float(v[b])))
    mass = {i: F(float(g.masses[i])) for i in set(B.tolist()) | set(LB.tolist())}
    MB = sum(mass[i] for i in B.tolist())
    uB = sum(mass[i] * val[i] for i in B.tolist()) / MB
    lhs = sum(mass[i] * abs(val[i] - uB) for i in B.tolist()) / MB
    lhs_double = sum(mass[i] * mass[j] * abs(val[i] - val[j])
                     for i in B.tolist() for j in B.tolist()) / (MB * MB)
    ML = sum(mass[a] for a in LB.tolist())
    ip = int(p) if float(p).is_integer() else None
    grad_p = F(0)
    inner_p = F(0)
    gm_float = 0.0
    for a in LB.tolist():
        diffs = [abs(val[int(b)] - val[a]) for b in g.neighbors(a)]
        grad = sum(diffs, F(0)) / eps
        if ip is not None:
            grad_p += mass[a] * grad**ip
            inner_p += mass[a] * sum((d**ip for d in diffs), F(0)) / eps**ip
        else:
            gm_float += float(mass[a]) * float(grad) ** p
    r = as_fraction(radius)
    if ip is not None:
        gm = grad_p / ML
        sm = inner_p / ML
        if ip == 1:
            rhs, rhs_sum = r * gm, r * sm
        else:
            rhs = float(r) * float(gm) ** (1.0 / ip)
            rhs_sum = float(r) * float(sm) ** (1.0 / ip)
    else:
        gm = gm_float / float(ML)
        rhs = float(r) * gm ** (1.0 / p)
        rhs_sum = math.nan
    return PISides(lhs, lhs_double, rhs, gm, rhs_sum, r, p, violated=(rhs == 0 and lhs > 0))


class _BallProblem:
    """Local data for repeated ratio evaluations on one ball.

    ``S`` is the inflated ball plus its neighbors, the only vertices whose
    values enter either side.  Values are passed as arrays over ``S``.
    """

    def __init__(self, g: NetGraph, B: np.ndarray, LB: np.ndarray, radius: float, p: float):
        self.g, self.p, self.r = g, float(p), float(radius)
        nbrs = [g.neighbors(a) for a in LB]
        S = np.unique(np.concatenate([LB] + nbrs)) if len(LB) else np.asarray(B)
        self.S = S
        self.B_loc = np.searchsorted(S, B)
        self.L_loc = np.searchsorted(S, LB)
        self.mB = g.masses[B]
        self.MB = self.mB.sum()
        self.mL = g.masses[LB]
        self.ML = self.mL.sum()
        rows = np.repeat(np.arange(len(LB)), [len(n) for n in nbrs])
        cols = np.searchsorted(S, np.concatenate(nbrs)) if len(LB) else np.zeros(0, int)
        self.e_row = rows
        self.e_src = self.L_loc[rows]
        self.e_dst = cols
        self.in_B = np.zeros(len(S), dtype=bool)
        self.in_B[self.B_loc] = True
        self.pos_L = np.full(len(S), -1)
        self.pos_L[self.L_loc] = np.arange(len(LB))
        # for each local vertex, the directed edge slots touching it
        slots = np.concatenate([np.arange(len(rows)), np.arange(len(rows))])
        ends = np.concatenate([self.e_src, self.e_dst])
        order = np.argsort(ends, kind="stable")
        self._slot_ptr = np.searchsorted(ends[order], np.arange(len(S) + 1))
        self._slots = slots[order]

    def grad(self, x: np.ndarray) -> np.ndarray:
        d = np.abs(x[self.e_dst] - x[self.e_src])
        return np.bincount(self.e_row, weights=d, minlength=len(self.L_loc)) / self.g.eps

    def lhs(self, x: np.ndarray) -> float:
        xb = x[self.B_loc] - x[self.B_loc[0]]
        uB = np.dot(self.mB, xb) / self.MB
        return float(np.dot(self.mB, np.abs(xb - uB)) / self.MB)

    def rhs_from_grad(self, grad: np.ndarray) -> float:
        gm = float(np.dot(self.mL, grad**self.p) / self.ML)
        return self.r * gm ** (1.0 / self.p)

    def ratio(self, x: np.ndarray) -> float:
        lhs = self.lhs(x)
        rhs = self.rhs_from_grad(self.grad(x))
        if rhs == 0:
            return 0.0 if lhs == 0 else math.inf
        return lhs / rhs

    def ascend(self, x: np.ndarray, steps: int, rng: np.random.Generator) -> tuple[float, np.ndarray]:
        """Coordinate ascent on the ratio, rescaling to unit spread."""
        x = np.array(x, dtype=np.float64)
        spread = float(np.ptp(x)) if len(x) else 0.0
        if spread == 0:
            return self.ratio(x), x
        x = (x - x.min()) / spread
        grad = self.grad(x)
        gp = grad**self.p
        num = float(np.dot(self.mL, gp))
        lhs = self.lhs(x)
        best = lhs / (self.r * (num / self.ML) ** (1 / self.p)) if num > 0 else 0.0
        eps = self.g.eps
        for _ in range(steps):
            v = int(rng.integers(len(self.S)))
            sl = self._slots[self._slot_ptr[v]:self._slot_ptr[v + 1]]
            rows = self.e_row[sl]
            other = np.where(self.e_src[sl] == v, self.e_dst[sl], self.e_src[sl])
            old = np.abs(x[other] - x[v])
            nb_vals = x[other]
            cands = x[v] + np.array([-0.5, -0.2, -0.05, 0.05, 0.2, 0.5])
            if len(nb_vals):
                cands = np.concatenate([cands, rng.choice(nb_vals, size=min(2, len(nb_vals)))])
            best_t, best_state = None, None
            for t in cands:
                new = np.abs(nb_vals - t)
                delta = np.bincount(rows, weights=(new - old) / eps, minlength=len(self.L_loc))
                idx = np.flatnonzero(delta)
                gnew = grad[idx] + delta[idx]
                gnew = np.maximum(gnew, 0.0)
                num2 = num + float(np.dot(self.mL[idx], gnew**self.p - gp[idx]))
                if num2 <= 0:
                    continue
                if self.in_B[v]:
                    xv = x[v]
                    x[v] = t
                    lhs2 = self.lhs(x)
                    x[v] = xv
                else:
                    lhs2 = lhs
                ratio = lhs2 / (self.r * (num2 / self.ML) ** (1 / self.p))
                if ratio > best * (1 + 1e-12):
                    best, best_t, best_state = ratio, t, (idx, gnew, num2, lhs2)
            if best_t is not None:
                idx, gnew, num, lhs = best_state
                x[v] = best_t
                grad[idx] = gnew
                gp[idx] = gnew**self.p
        # recompute from scratch so the reported value carries no drift
        return self.ratio(x), x


@dataclass(frozen=True)
class PoincareEstimate:
    """Best-constant estimate on one ball.

    ``C_lower`` is attained by ``argmax_function`` and so bounds the optimal
    constant from below.  ``C_exact`` comes from the tiny-instance oracle and
    ``C_upper_heuristic`` from the quadratic relaxation at ``p = 2``.
    """

    p: float
    lam: float
    ball: BallSpec
    C_lower: float
    C_exact: float | None
    C_upper_heuristic: float | None
    argmax_function: VertexFunction | None
    disconnected: bool = False
    ball_size: int = 0
    lambda_ball_size: int = 0
    suite_ratios: dict = field(default_factory=dict, repr=False)
    suite_support: np.ndarray | None = field(default=None, repr=False)
    suite_values: dict = field(default_factory=dict, repr=False)
    seed: int = 0

    def to_dict(self) -> dict:
        w = None
        if self.argmax_function is not None and self.suite_support is not None:
            vals = self.argmax_function.values[self.suite_support]
            w = [[int(a), float(b)] for a, b in zip(self.suite_support, vals)]
        return {
            "p": self.p, "lambda": self.lam,
            "ball": {"center": self.ball.center, "radius": float(self.ball.radius)},
            "C_lower": self.C_lower, "C_exact": self.C_exact,
            "C_upper_heuristic": self.C_upper_heuristic,
            "disconnected": self.disconnected, "ball_size": self.ball_size,
            "lambda_ball_size": self.lambda_ball_size,
            "suite_ratios": dict(sorted(self.suite_ratios.items())),
            "witness": w, "seed": self.seed,
        }


def _components(g: NetGraph, LB: np.ndarray) -> list[np.ndarray]:
    sub = g.csr[LB][:, LB]
    n, labels = csgraph.connected_components(sub, directed=False)
    return [LB[labels == c] for c in range(n)]


def _suite(g: NetGraph, prob: _BallProblem, center: int, suite_size: int,
           rng: np.random.Generator, extra) -> dict[str, np.ndarray]:
    S = prob.S
    k = len(S)
    out: dict[str, np.ndarray] = {}
    if g.coords is not None:
        X = g.coords[S]
        for j in range(X.shape[1]):
            out[f"coord{j}"] = X[:, j].copy()
        for t in range(max(2, suite_size // 4)):
            d = rng.normal(size=X.shape[1])
            d /= np.linalg.norm(d)
            proj = X @ d
            out[f"halfplane{t}"] = (proj > np.median(proj[prob.B_loc])).astype(float)
    LBv = S[prob.L_loc]
    nsrc = max(1, suite_size // 4)
    srcs = [center] + list(rng.choice(LBv, size=min(nsrc, len(LBv)), replace=True))
    hops = hop_distances(g, np.array(srcs))
    for t, row in enumerate(hops):
        h = row[S].astype(float)
        h[h < 0] = h.max() + 1 if (h >= 0).any() else 0
        out[f"hop{t}"] = h
    for t in range(suite_size):
        out[f"sign{t}"] = rng.choice([-1.0, 1.0], size=k)
        out[f"gauss{t}"] = rng.normal(size=k)
    for name, vals in (extra or {}).items():
        v = np.asarray(vals, dtype=np.float64)
        out[f"extra:{name}"] = v[S] if v.shape == (g.n_vertices,) else v
    return out


def estimate_constant_lower(g: NetGraph, ball: BallSpec, lam: float = 1.0, p: float = 1.0,
                            suite_size: int = 16, seed: int = 0, ascent_steps: int = 200,
                            extra_functions: dict | None = None, with_oracle: bool = True,
                            with_upper: bool = True) -> PoincareEstimate:
    """Lower-bound the Poincare constant on ``ball`` by explicit test functions.

    The suite holds coordinate functions, half-space indicators, hop distances
    to the center and random vertices, random signs and Gaussians, plus any
    ``extra_functions`` (full vertex arrays).  Coordinate ascent then starts
    from the best suite member.  A disconnected inflated ball is handled per
    component and flagged.
    """
    rng = np.random.default_rng(seed)
    B, LB = _ball_sets(g, ball, lam)
    comps = _components(g, LB)
    best = (-1.0, None, None, None)
    ratios: dict[str, float] = {}
    suite_values: dict[str, np.ndarray] = {}
    support = None
    for ci, comp in enumerate(comps):
        Bc = np.intersect1d(B, comp)
        if len(Bc) == 0:
            continue
        prob = _BallProblem(g, Bc, comp, ball.radius, p)
        suite = _suite(g, prob, ball.center if ball.center in comp else int(comp[0]),
                       suite_size, rng, extra_functions)
        tag = "" if len(comps) == 1 else f"[{ci}]"
        for name, x in suite.items():
            rv = prob.ratio(x)
            ratios[name + tag] = rv
            suite_values[name + tag] = x
            if rv > best[0]:
                best = (rv, x, prob, name + tag)
        if support is None:
            support = prob.S
    C_lower, x_best, prob, _ = best
    if prob is None:
        C_lower, argmax = 0.0, None
    else:
        if ascent_steps > 0 and C_lower > 0:
            ra, xa = prob.ascend(x_best, ascent_steps, rng)
            ratios["ascent"] = ra
            if ra > C_lower:
                C_lower, x_best = ra, xa
        full = np.zeros(g.n_vertices)
        full[prob.S] = x_best
        argmax = VertexFunction(full, g)
        support = prob.S
    C_lower = max(C_lower, 0.0)
    C_exact = None
    if with_oracle and float(p) == 1.0 and len(LB) <= TINY_LIMIT:
        C_exact = exact_constant_p1_tiny(g, ball, lam)
    C_up = None
    if with_upper and float(p) == 2.0:
        C_up = spectral_upper_p2(g, ball, lam)
    return PoincareEstimate(p=float(p), lam=float(lam), ball=ball, C_lower=float(C_lower),
                            C_exact=C_exact, C_upper_heuristic=C_up, argmax_function=argmax,
                            disconnected=len(comps) > 1, ball_size=len(B),
                            lambda_ball_size=len(LB), suite_ratios=ratios,
                            suite_support=support, suite_values=suite_values, seed=seed)


def suite_ratio(g: NetGraph, ball: BallSpec, lam: float, p: float, u) -> float:
    """Ratio ``lhs / rhs`` of one function, per component when disconnected."""
    v = _values(g, u)
    B, LB = _ball_sets(g, ball, lam)
    best = 0.0
    for comp in _components(g, LB):
        Bc = np.intersect1d(B, comp)
        if len(Bc) == 0:
            continue
        prob = _BallProblem(g, Bc, comp, ball.radius, p)
        best = max(best, prob.ratio(v[prob.S]))
    return best


def exact_constant_p1_tiny(g: NetGraph, ball: BallSpec, lam: float = 1.0,
                           return_maximizer: bool = False):
    """Exact best constant at ``p = 1`` for an inflated ball of at most 6 vertices.

    At ``p = 1`` the right side is a weighted total variation, so by the
    coarea formula the supremum is attained at an indicator function.  All
    subsets ``A`` of the inflated ball are enumerated; vertices just outside
    it join whichever side costs less.  The value of ``A`` is
    ``2 m(A n B) m(B \\ A) / (m(B)^2 W(A))`` with ``W`` the cut weight.
    A disconnected inflated ball is handled per component (maximum taken).
    """
    B, LB = _ball_sets(g, ball, lam)
    if len(LB) > TINY_LIMIT:
        raise ValueError("oracle restricted to tiny instances")
    r = float(ball.radius)
    eps = g.eps
    best, best_u = 0.0, np.zeros(g.n_vertices)
    for comp in _components(g, LB):
        Bc = np.intersect1d(B, comp)
        if len(Bc) < 2:
            continue
        ML = g.masses[comp].sum()
        c0 = r / (eps * ML)
        k = len(comp)
        inL = {int(a): i for i, a in enumerate(comp)}
        inner = []  # (i, j, w) edges inside the component
        outer: dict[int, list] = {}  # outside vertex -> [(i, w)]
        for a in comp.tolist():
            for b in g.neighbors(a).tolist():
                if b in inL:
                    if a < b:
                        inner.append((inL[a], inL[b], c0 * (g.masses[a] + g.masses[b])))
                else:
                    outer.setdefault(b, []).append((inL[a], c0 * g.masses[a]))
        mB = np.zeros(k)
        for b in Bc.tolist():
            mB[inL[b]] = g.masses[b]
        MB = mB.sum()
        for mask in range(1, 2**k - 1):
            side = np.array([(mask >> i) & 1 for i in range(k)], dtype=bool)
            a_mass = mB[side].sum()
            b_mass = MB - a_mass
            if a_mass <= 0 or b_mass <= 0:
                continue
            W = sum(w for i, j, w in inner if side[i] != side[j])
            choice = {}
            for o, lst in outer.items():
                w_in = sum(w for i, w in lst if side[i])
                w_out = sum(w for i, w in lst if not side[i])
                W += min(w_in, w_out)
                choice[o] = w_in >= w_out
            val = 2.0 * a_mass * b_mass / (MB * MB * W)
            if val > best:
                best = val
                best_u = np.zeros(g.n_vertices)
                best_u[comp[side]] = 1.0
                for o, on in choice.items():
                    best_u[o] = 1.0 if on else 0.0
    if return_maximizer:
        return best, VertexFunction(best_u, g)
    return best


def spectral_upper_p2(g: NetGraph, ball: BallSpec, lam: float = 1.0,
                      max_size: int = 2000) -> float | None:
    """Upper bound on the ``p = 2`` constant through a quadratic relaxation.

    Uses ``lhs <= sqrt(variance over B)`` and
    ``|grad u|^2 >= sum_{b ~ a} |u(b) - u(a)|^2 / eps^2``; the resulting
    Rayleigh quotient is maximized by a generalized eigenvalue problem.
    Returns None when the inflated ball is disconnected or too large.
    """
    B, LB = _ball_sets(g, ball, lam)
    if len(_components(g, LB)) > 1:
        return None
    prob = _BallProblem(g, B, LB, ball.radius, 2.0)
    k = len(prob.S)
    if k > max_size:
        return None
    mB = np.zeros(k)
    mB[prob.B_loc] = prob.mB
    A = (np.diag(mB) - np.outer(mB, mB) / prob.MB) / prob.MB
    Q = np.zeros((k, k))
    w = g.masses[prob.S[prob.e_src]] / (g.eps**2 * prob.ML) * float(ball.radius) ** 2
    for s, t, wt in zip(prob.e_src, prob.e_dst, w):
        Q[s, s] += wt
        Q[t, t] += wt
        Q[s, t] -= wt
        Q[t, s] -= wt
    shift = np.full((k, k), max(np.abs(Q).max(), 1.0) / k)
    vals = linalg.eigh(A, Q + shift, eigvals_only=True)
    return float(math.sqrt(max(vals.max(), 0.0)))


@dataclass(frozen=True)
class HolderComparison:
    p: float
    p_prime: float
    ratios_p: dict
    ratios_p_prime: dict
    monotone: dict
    all_monotone: bool
    max_p: float
    max_p_prime: float
    exact: bool


def holder_lift(g: NetGraph, estimate: PoincareEstimate, p_prime: float,
                functions: dict | None = None, exact: bool | None = None) -> HolderComparison:
    """Recompute the suite ratios at ``p_prime >= p`` and check they do not grow.

    Power means increase with the exponent, so ``rhs`` at ``p_prime`` is at
    least ``rhs`` at ``p`` and each ratio can only drop.  Exact mode compares
    ``mean_{p'}^p >= mean_p^{p'}`` in rationals (integer exponents only).
    """
    p = estimate.p
    if p_prime < p:
        raise ValueError("p_prime must be at least p")
    ball, lam = estimate.ball, estimate.lam
    if functions is None:
        functions = {}
        for name, x in estimate.suite_values.items():
            full = np.zeros(g.n_vertices)
            full[estimate.suite_support] = x if len(x) == len(estimate.suite_support) else 0
            functions[name] = full
        if estimate.argmax_function is not None:
            functions["argmax"] = estimate.argmax_function.values
    B, LB = _ball_sets(g, ball, lam)
    if exact is None:
        exact = len(LB) <= 200 and float(p).is_integer() and float(p_prime).is_integer()
    rp, rq, mono = {}, {}, {}
    for name, u in functions.items():
        sp = pi_sides(g, ball, lam, p, u, exact=exact)
        sq = pi_sides(g, ball, lam, p_prime, u, exact=exact)
        rp[name], rq[name] = sp.ratio, sq.ratio
        if exact:
            a, b = sp.grad_mean_p, sq.grad_mean_p
            mono[name] = bool(b ** int(p) >= a ** int(p_prime))
        else:
            mono[name] = bool(sq.ratio <= sp.ratio * (1 + 1e-12) or sp.ratio == math.inf)
    return HolderComparison(p=p, p_prime=p_prime, ratios_p=rp, ratios_p_prime=rq,
                            monotone=mono, all_monotone=all(mono.values()),
                            max_p=max(rp.values(), default=0.0),
                            max_p_prime=max(rq.values(), default=0.0), exact=exact)


# grid certificate ----------------------------------------------------------

def _snap_chain(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Lattice chain (integer units) along the segment from ``x`` to ``y``.

    Points ``t_j`` at unit spacing along the segment are rounded to the
    nearest lattice point; the endpoints stay fixed.
    """
    L = float(np.hypot(*(y - x)))
    k = max(int(math.ceil(L)), 1)
    ts = [x + (y - x) * min(j / L, 1.0) if L > 0 else x for j in range(k + 1)]
    chain = np.rint(np.array(ts)).astype(np.int64)
    chain[0], chain[-1] = x, y
    return chain


def grid_pi_certificate(level: int, n: int, functions=None, pairs: int = 200,
                        seed: int = 0) -> dict:
    """Chaining check for the dyadic grid ``eps Z^2`` with ``eps = 2**(1-level)``.

    For sampled vertex pairs in the open Euclidean ball of radius ``n`` at
    the origin, a chain of snapped lattice points along the segment is built;
    consecutive points must lie within ``3 eps`` (so they are adjacent or
    equal) and the telescoping bound ``|f(x)-f(y)| <= sum |f(p_j)-f(p_{j-1})|``
    must hold.  The empirical constant

        C = sum_{x,y in B} |f(x)-f(y)| m m / (n m(B) sum_{x in B} sum_{z~x} |f(z)-f(x)| m(x))

    is reported per function and compared with 256.
    """
    if level < 1 or n < 1:
        raise ValueError("level and n must be at least 1")
    eps = Fraction(1, 2 ** (level - 1))
    R = int(n / eps)  # ball radius in lattice units
    ext = R + 3
    ax = np.arange(-ext, ext + 1)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    P = np.stack([X.ravel(), Y.ravel()], axis=1)
    inB = (P**2).sum(axis=1) < R * R
    Bpts = P[inB]
    mass = math.pi * float(eps) ** 2
    offs = np.array([(a, b) for a in range(-3, 4) for b in range(-3, 4)
                     if 1 <= a * a + b * b <= 9])
    rng = np.random.default_rng(seed)
    if functions is None:
        functions = {
            "const": lambda x, y: np.zeros_like(x),
            "x": lambda x, y: x,
            "x+y": lambda x, y: x + y,
            "x^2": lambda x, y: x * x,
            "sin": lambda x, y: np.sin(3 * x) * np.cos(2 * y),
            "halfplane": lambda x, y: (x > 0).astype(float),
        }
    # chains on sampled pairs
    idx = rng.integers(0, len(Bpts), size=(pairs, 2))
    if len(Bpts) > 1:
        idx = idx[idx[:, 0] != idx[:, 1]]
    max_step_sq = 0
    exits = 0
    chains = []
    for a, b in idx:
        ch = _snap_chain(Bpts[a].astype(float), Bpts[b].astype(float))
        steps = np.diff(ch, axis=0)
        max_step_sq = max(max_step_sq, int((steps**2).sum(axis=1).max(initial=0)))
        exits += int(((ch**2).sum(axis=1) >= R * R).sum())
        chains.append(ch)
    e = float(eps)
    report = {"level": level, "n": n, "epsilon": e, "ball_vertices": int(len(Bpts)),
              "pairs": int(len(idx)), "max_step": math.sqrt(max_step_sq) * e,
              "steps_within_3eps": bool(max_step_sq <= 9), "chain_points_outside_ball": exits,
              "functions": {}}
    for name, f in functions.items():
        fb = np.asarray(f(Bpts[:, 0] * e, Bpts[:, 1] * e), dtype=np.float64)
        m = np.full(len(Bpts), mass)
        dbl = _double_mean(fb, m) * (m.sum() ** 2)
        grad_sum = 0.0
        for dx, dy in offs:
            z = Bpts + [dx, dy]
            grad_sum += np.abs(f(z[:, 0] * e, z[:, 1] * e) - fb).sum() * mass
        tele_ok = True
        for (a, b), ch in zip(idx, chains):
            vals = f(ch[:, 0] * e, ch[:, 1] * e)
            lhs = abs(vals[-1] - vals[0])
            if lhs > np.abs(np.diff(vals)).sum() * (1 + 1e-12) + 1e-15:
                tele_ok = False
        denom = n * m.sum() * grad_sum
        C = 0.0 if denom == 0 else float(dbl / denom)
        report["functions"][name] = {"C": C, "telescoping_holds": tele_ok, "C_le_256": C <= 256}
    report["C_max"] = max(v["C"] for v in report["functions"].values())
    report["pass"] = bool(report["steps_within_3eps"] and report["C_max"] <= 256
                          and all(v["telescoping_holds"] for v in report["functions"].values()))
    return report
