"""Bump functions, a Lipschitz partition of unity and extension of vertex functions.

For a net ``A`` at scale ``eps`` in Euclidean space

    psi_a(x) = min(1, max(0, 2 eps - |x - a|) / eps),   phi_a = psi_a / sum_b psi_b

and a vertex function ``u`` extends to ``f = sum_a u(a) phi_a``.  The checks
here probe ``Lip f`` numerically against the discrete gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from .graph import NetGraph, VertexFunction, graph_ball
from .spaces import BallSpec
from .poincare import discrete_gradient, gradient_all

_UNIT_BALL_VOLUME = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    """Partition of unity subordinate to the balls ``B(a, 2 eps)`` of a net graph.

    Evaluation is pure; no cache is kept since each query touches only the
    handful of members within ``2 eps``.
    """

    graph: NetGraph

    def __post_init__(self):
        if self.graph.coords is None:
            raise ValueError("partition of unity needs Euclidean coordinates")

    @property
    def epsilon(self) -> float:
        return self.graph.eps

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.graph.coords)

    def psi(self, a: int, x) -> float:
        """Bump of member ``a`` (vertex id) at coordinates ``x``."""
        d = float(np.linalg.norm(np.asarray(x, dtype=np.float64) - self.graph.coords[a]))
        e = self.epsilon
        return min(1.0, max(0.0, 2 * e - d) / e)

    def active(self, X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Padded active members of each point.

        Returns ``(idx, dist, mask)`` of shape (n, k): member ids, distances
        and a mask of members with ``d < 2 eps``.
        """
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        e = self.epsilon
        hits = self.tree.query_ball_point(X, 2 * e * (1 + 1e-9))
        k = max((len(h) for h in hits), default=0)
        idx = np.zeros((len(X), max(k, 1)), dtype=np.int64)
        mask = np.zeros((len(X), max(k, 1)), dtype=bool)
        for i, h in enumerate(hits):
            idx[i, :len(h)] = h
            mask[i, :len(h)] = True
        diff = X[:, None, :] - self.graph.coords[idx]
        dist = np.sqrt((diff * diff).sum(axis=-1))
        mask &= dist < 2 * e
        return idx, dist, mask

    def weights(self, X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(idx, psi, phi)`` padded arrays at points ``X``."""
        idx, dist, mask = self.active(X)
        e = self.epsilon
        psi = np.where(mask, np.minimum(1.0, np.maximum(0.0, 2 * e - dist) / e), 0.0)
        tot = psi.sum(axis=1)
        if np.any(tot <= 0):
            raise ValueError("maximality violated: no member within 2 eps")
        return idx, psi, psi / tot[:, None]

    def phi_gradients(self, X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(idx, phi, grad_phi)`` with ``grad_phi`` of shape (n, k, d)."""
        idx, dist, mask = self.active(X)
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        e = self.epsilon
        psi = np.where(mask, np.minimum(1.0, np.maximum(0.0, 2 * e - dist) / e), 0.0)
        ramp = mask & (dist > e)
        safe = np.where(dist > 0, dist, 1.0)
        unit = (X[:, None, :] - self.graph.coords[idx]) / safe[..., None]
        dpsi = np.where(ramp[..., None], -unit / e, 0.0)
        S = psi.sum(axis=1)
        if np.any(S <= 0):
            raise ValueError("maximality violated: no member within 2 eps")
        dS = dpsi.sum(axis=1)
        phi = psi / S[:, None]
        dphi = (dpsi * S[:, None, None] - psi[..., None] * dS[:, None, :]) / (S**2)[:, None, None]
        return idx, phi, dphi


def _vals(pou: PartitionOfUnity, u) -> np.ndarray:
    if isinstance(u, VertexFunction):
        return u.values
    v = np.asarray(u, dtype=np.float64)
    if v.shape != (pou.graph.n_vertices,):
        raise ValueError("one value per vertex required")
    return v


def extend_function(pou: PartitionOfUnity, u_tilde, x) -> np.ndarray | float:
    """``f(x) = sum_a u(a) phi_a(x)`` at one point or an array of points.

    The sum is centered at the nearest member's value so that constants are
    reproduced exactly.
    """
    v = _vals(pou, u_tilde)
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    idx, _, phi = pou.weights(np.atleast_2d(X))
    _, near = pou.tree.query(np.atleast_2d(X))
    base = v[near]
    f = base + (phi * (v[idx] - base[:, None])).sum(axis=1)
    return float(f[0]) if single else f


def _directions(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    d = rng.normal(size=(count, dim))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


@dataclass(frozen=True)
class PointwiseCheck:
    lip_estimate: float
    bound: float
    passed: bool
    phi_lipschitz: float
    C_eff: float
    gradient: float
    nearest_member: int
    bound_worst_case: float | None

    @property
    def pass_(self) -> bool:
        return self.passed


def check_pointwise_bound(pou: PartitionOfUnity, u_tilde, x, h: float, directions: int = 64,
                          seed: int = 0, doubling_constant: float | None = None) -> PointwiseCheck:
    """Probe ``Lip f(x)`` and compare with ``C_eff |grad u|(a0)``.

    ``a0`` is the nearest member and ``h`` must not exceed half of
    ``eps - |x - a0|``.  ``C_eff`` is ``eps`` times the largest measured
    difference quotient of any ``phi_a`` over the same probe pairs; the
    worst-case constant ``5 C_mu^9`` is reported when ``doubling_constant``
    is given.
    """
    v = _vals(pou, u_tilde)
    x = np.asarray(x, dtype=np.float64)
    g = pou.graph
    dist0, a0 = pou.tree.query(x)
    a0 = int(a0)
    e = pou.epsilon
    limit = (e - dist0) / 2
    if not (h > 0 and h <= limit):
        raise ValueError(f"probe radius h={h} must lie in (0, {limit}]")
    rng = np.random.default_rng(seed)
    Y = x + h * _directions(len(x), directions, rng)
    pts = np.vstack([x[None, :], Y])
    idx, _, phi = pou.weights(pts)
    # dense phi over the union of active members
    members = np.unique(idx[phi > 0])
    dense = np.zeros((len(pts), len(members)))
    pos = np.searchsorted(members, idx)
    for row in range(len(pts)):
        live = phi[row] > 0
        dense[row, pos[row, live]] = phi[row, live]
    c = v[members] - v[a0]
    f = dense @ c
    step = np.linalg.norm(Y - x, axis=1)
    lip = float(np.max(np.abs(f[1:] - f[0]) / step))
    phi_lip = float(np.max(np.abs(dense[1:] - dense[0]).max(axis=1) / step))
    grad = discrete_gradient(VertexFunction(v, g), a0)
    C_eff = phi_lip * e
    bound = C_eff * grad
    worst = None if doubling_constant is None else 5 * doubling_constant**9 * grad
    return PointwiseCheck(lip_estimate=lip, bound=bound,
                          passed=bool(lip <= bound * (1 + 1e-9) + 1e-300 or lip == 0.0),
                          phi_lipschitz=phi_lip, C_eff=C_eff, gradient=grad,
                          nearest_member=a0, bound_worst_case=worst)


@dataclass(frozen=True)
class IntegralCheck:
    lhs_integral: float
    rhs_integral: float
    passed: bool
    C_eff: float
    samples: int
    L: float
    vertices_in_rhs: int


def _sample_ball(center: np.ndarray, r: float, n: int, rng: np.random.Generator) -> np.ndarray:
    d = len(center)
    dirs = _directions(d, n, rng)
    rad = r * rng.random(n) ** (1.0 / d)
    return center + dirs * rad[:, None]


def lip_gradient_integral_check(pou: PartitionOfUnity, u_tilde, center, r: float, p: float = 1.0,
                                n_samples: int = 10_000, seed: int = 0,
                                L: float | None = None) -> IntegralCheck:
    """Compare ``int_{B(x, r)} (Lip f)^p dmu`` with the discrete energy nearby.

    The right side is ``C_eff^p sum |grad u|^p m`` over the graph ball
    ``B_V(a0, (L + 1)(r + 2 eps))`` around the member nearest the center.
    For analytic Lebesgue spaces the left side is a Monte Carlo mean over
    ``n_samples`` uniform points times the ball volume; for empirical spaces
    it is the weighted sum over sample points in the ball.
    ``Lip f`` is the norm of the analytic gradient, and ``C_eff`` is ``eps``
    times the largest ``|grad phi_a|`` met at the evaluation points.
    """
    g = pou.graph
    space = g.space
    v = _vals(pou, u_tilde)
    center = np.asarray(center, dtype=np.float64)
    rng = np.random.default_rng(seed)
    e = pou.epsilon
    if space is not None and space.measure_kind != "lebesgue-analytic":
        inside = np.linalg.norm(space.points - center, axis=1) < r
        pts = space.points[inside]
        w = space.weights[inside]
    else:
        pts = _sample_ball(center, r, n_samples, rng)
        w = np.full(len(pts), _UNIT_BALL_VOLUME[len(center)] * r ** len(center) / len(pts))
    idx, _, dphi = pou.phi_gradients(pts)
    _, near = pou.tree.query(pts)
    c = v[idx] - v[near][:, None]
    gradf = (dphi * c[..., None]).sum(axis=1)
    lipf = np.linalg.norm(gradf, axis=1)
    lhs = float(np.dot(w, lipf**p))
    C_eff = float(np.linalg.norm(dphi, axis=2).max()) * e if len(pts) else 0.0
    L = (space.quasiconvexity_L if space is not None and space.quasiconvexity_L else 1.0) if L is None else L
    _, a0 = pou.tree.query(center)
    R = (L + 1) * (r + 2 * e)
    verts = graph_ball(g, BallSpec(int(a0), R))
    grad = gradient_all(g, v)
    rhs = float(C_eff**p * np.dot(grad[verts] ** p, g.masses[verts]))
    return IntegralCheck(lhs_integral=lhs, rhs_integral=rhs,
                         passed=bool(lhs <= rhs * (1 + 1e-9) or lhs == 0.0), C_eff=C_eff,
                         samples=len(pts), L=float(L), vertices_in_rhs=len(verts))
