"""Maximal epsilon-separated subsets (nets) and their dyadic refinements."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import sparse

from ._util import as_fraction, digest_indices, readonly
from .spaces import SampledSpace

ORDERS = ("shuffle", "lattice")


@dataclass(frozen=True, eq=False)
class EpsNet:
    """A maximal ``epsilon``-separated subset of a sampled space.

    Attributes
    ----------
    epsilon : Fraction
        Separation scale, kept exact.
    member_indices : ndarray of int64
        Sorted indices into the parent space.
    seed : int
        Seed of the greedy ordering.
    parent : EpsNet or None
        Coarser net at scale ``2 * epsilon`` that this one refines.
    order : str
        ``"shuffle"`` or ``"lattice"`` greedy ordering.
    """

    epsilon: Fraction
    member_indices: np.ndarray
    seed: int = 0
    parent: "EpsNet | None" = None
    order: str = "shuffle"

    def __post_init__(self):
        object.__setattr__(self, "epsilon", as_fraction(self.epsilon))
        idx = np.unique(np.asarray(self.member_indices, dtype=np.int64))
        object.__setattr__(self, "member_indices", readonly(idx))

    @property
    def eps(self) -> float:
        return float(self.epsilon)

    def __len__(self) -> int:
        return len(self.member_indices)

    def digest(self) -> str:
        return digest_indices(self.member_indices)

    def to_dict(self) -> dict:
        return {
            "epsilon": float(self.epsilon),
            "epsilon_exact": str(self.epsilon),
            "seed": int(self.seed),
            "order": self.order,
            "member_indices": self.member_indices.tolist(),
            "digest": self.digest(),
            "parent_digest": None if self.parent is None else self.parent.digest(),
        }


def _greedy_order(space: SampledSpace, seed: int, order: str) -> np.ndarray:
    rng = np.random.default_rng(seed)
    perm = rng.permutation(space.n)
    if order == "shuffle":
        return perm
    if order != "lattice":
        raise ValueError(f"unknown order {order!r}")
    if not space.is_lattice:
        raise ValueError("lattice order needs a lattice space")
    # coarser dyadic points first: rank by the lowest set bit shared by all coordinates
    c = np.abs(space.lattice_coords)
    low = np.where(c == 0, np.int64(1) << 62, c & -c).min(axis=1)
    rank = np.empty(space.n, dtype=np.int64)
    rank[perm] = np.arange(space.n)
    return np.lexsort((rank, -low))


def _dyadic_block(space: SampledSpace, epsilon: Fraction) -> np.ndarray | None:
    """Points of the sublattice ``epsilon * Z^d`` when ``epsilon / q`` is a power of 2."""
    ratio = epsilon / space.lattice_scale
    if ratio.denominator != 1:
        return None
    k = ratio.numerator
    if k & (k - 1):
        return None
    return np.flatnonzero(np.all(space.lattice_coords % k == 0, axis=1))


def _greedy(space: SampledSpace, epsilon: Fraction, order_idx: np.ndarray,
            initial: np.ndarray, use_block: bool) -> np.ndarray:
    n = space.n
    admitted = [np.asarray(initial, dtype=np.int64)]
    if use_block:
        block = _dyadic_block(space, epsilon)
        if block is not None:
            block = np.setdiff1d(block, admitted[0])
            I, J = space.cross_pairs(admitted[0], epsilon, "lt", B=block)
            if len(I) == 0:
                admitted.append(block)
    seeded = np.concatenate(admitted)
    blocked = np.zeros(n, dtype=bool)
    if len(seeded):
        _, J = space.cross_pairs(seeded, epsilon, "lt")
        blocked[J] = True
    cand = order_idx[~blocked[order_idx]]
    if len(cand) == 0:
        return np.sort(seeded)
    I, J = space.pairs_within(epsilon, "lt", idx=cand)
    adj = sparse.coo_matrix((np.ones(2 * len(I), dtype=np.int8),
                             (np.concatenate([I, J]), np.concatenate([J, I]))),
                            shape=(n, n)).tocsr()
    indptr, indices = adj.indptr, adj.indices
    chosen = []
    for v in cand.tolist():
        if blocked[v]:
            continue
        chosen.append(v)
        blocked[indices[indptr[v]:indptr[v + 1]]] = True
    return np.sort(np.concatenate([seeded, np.asarray(chosen, dtype=np.int64)]))


def build_maximal_net(space: SampledSpace, epsilon, seed: int = 0, order: str = "shuffle") -> EpsNet:
    """Greedy maximal ``epsilon``-separated subset.

    Points are visited in a seeded order and admitted when every admitted
    point is at distance at least ``epsilon``.  With ``order="lattice"`` on a
    lattice sample the coarser dyadic points are visited first, so that a
    dyadic ``epsilon`` yields the sublattice ``epsilon Z^d`` exactly.
    """
    eps = as_fraction(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    if space.n == 0:
        return EpsNet(eps, np.zeros(0, dtype=np.int64), seed, None, order)
    order_idx = _greedy_order(space, seed, order)
    members = _greedy(space, eps, order_idx, np.zeros(0, dtype=np.int64), order == "lattice")
    return EpsNet(eps, members, seed, None, order)


def refine_nested(space: SampledSpace, coarse: EpsNet, seed: int | None = None) -> EpsNet:
    """Extend ``coarse`` to a maximal net at half its scale."""
    seed = coarse.seed if seed is None else seed
    eps = coarse.epsilon / 2
    if space.n == 0:
        return EpsNet(eps, coarse.member_indices, seed, coarse, coarse.order)
    order_idx = _greedy_order(space, seed, coarse.order)
    members = _greedy(space, eps, order_idx, coarse.member_indices, coarse.order == "lattice")
    return EpsNet(eps, members, seed, coarse, coarse.order)


def nested_chain(space: SampledSpace, epsilon0, levels: int, seed: int = 0,
                 order: str = "shuffle") -> list[EpsNet]:
    """Nets at ``epsilon0 / 2**i`` for ``i < levels``, each refining the previous."""
    nets = [build_maximal_net(space, epsilon0, seed, order)]
    for _ in range(1, levels):
        nets.append(refine_nested(space, nets[-1], seed))
    return nets


def hausdorff_gap(space: SampledSpace, net: EpsNet) -> float:
    """Largest distance from a space point to its nearest net member."""
    if len(net) == 0:
        if space.n == 0:
            return 0.0
        raise ValueError("empty net on a nonempty space")
    d, _ = space.nearest_member(net.member_indices)
    return float(d.max())


def check_net(space: SampledSpace, net: EpsNet) -> dict:
    """Exact separation, maximality and nesting checks for a net."""
    m = net.member_indices
    I, _ = space.pairs_within(net.epsilon, "lt", idx=m)
    separated = len(I) == 0
    if space.n == 0:
        covered = True
    elif len(m) == 0:
        covered = False
    else:
        _, near = space.nearest_member(m)
        ok = space.compare(np.arange(space.n), near, net.epsilon, "lt")
        if not ok.all():
            # float nearest may hide an exact tie; recheck those points fully
            bad = np.flatnonzero(~ok)
            _, J = space.cross_pairs(m, net.epsilon, "lt", B=bad)
            ok[np.unique(J)] = True
        covered = bool(ok.all())
    nested = True
    if net.parent is not None:
        nested = bool(np.isin(net.parent.member_indices, m).all()
                      and net.parent.epsilon == 2 * net.epsilon)
    return {"separated": separated, "maximal": covered, "nested": nested}
