from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmdisc.net import (build_maximal_net, check_net, hausdorff_gap, nested_chain,
                        refine_nested)
from mmdisc.spaces import SampledSpace, make_euclidean_lattice

from oracles import net_invariants


def test_unit_lattice_at_unit_scale_takes_everything():
    sp = make_euclidean_lattice(2, 1, 4)
    net = build_maximal_net(sp, 1, seed=5)
    assert len(net) == 81


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_lattice_at_one_and_a_half(seed):
    sp = make_euclidean_lattice(2, 1, 4)
    net = build_maximal_net(sp, 1.5, seed=seed)
    ref = net_invariants(sp.points, net.member_indices, 1.5)
    assert ref["separated"] and ref["maximal"]
    assert 0 <= hausdorff_gap(sp, net) < 1.5
    assert hausdorff_gap(sp, net) == pytest.approx(ref["gap"])


def test_singleton():
    sp = SampledSpace.from_points(np.array([[3.0, 4.0]]))
    net = build_maximal_net(sp, 7)
    assert net.member_indices.tolist() == [0]
    ref = refine_nested(sp, net)
    assert ref.member_indices.tolist() == [0]
    assert ref.epsilon == Fraction(7, 2)


def test_refinement_contains_integer_points():
    sp = make_euclidean_lattice(2, "1/2", 6)
    coarse = build_maximal_net(sp, 1, order="lattice")
    assert np.all(sp.lattice_coords[coarse.member_indices] % 2 == 0)
    fine = refine_nested(sp, coarse)
    assert set(coarse.member_indices) <= set(fine.member_indices)


def test_chain_of_three():
    sp = make_euclidean_lattice(2, "1/4", 12)
    nets = nested_chain(sp, 1, 3, seed=4)
    assert [n.epsilon for n in nets] == [1, Fraction(1, 2), Fraction(1, 4)]
    for a, b in zip(nets, nets[1:]):
        assert set(a.member_indices.tolist()) <= set(b.member_indices.tolist())
        assert b.parent is a
    for n in nets:
        assert all(check_net(sp, n).values())


def test_dyadic_order_gives_sublattices():
    sp = make_euclidean_lattice(2, "1/8", 16)
    for net in nested_chain(sp, 1, 4, order="lattice"):
        k = int(net.epsilon / Fraction(1, 8))
        c = sp.lattice_coords[net.member_indices]
        assert np.all(c % k == 0)
        assert len(net) == (2 * (16 // k) + 1) ** 2


def test_whole_space_gap_is_zero():
    sp = make_euclidean_lattice(1, 1, 5)
    assert hausdorff_gap(sp, build_maximal_net(sp, 1)) == 0.0


def test_empty_net_on_nonempty_space():
    from mmdisc.net import EpsNet
    sp = make_euclidean_lattice(1, 1, 2)
    with pytest.raises(ValueError):
        hausdorff_gap(sp, EpsNet(Fraction(1), np.zeros(0, dtype=np.int64), 0, None, "shuffle"))


def test_rejects_nonpositive_epsilon():
    sp = make_euclidean_lattice(1, 1, 2)
    with pytest.raises(ValueError):
        build_maximal_net(sp, 0)


def test_seed_determinism_and_digest():
    rng = np.random.default_rng(0)
    sp = SampledSpace.from_points(rng.random((300, 2)))
    a = build_maximal_net(sp, 0.1, seed=9)
    b = build_maximal_net(sp, 0.1, seed=9)
    assert np.array_equal(a.member_indices, b.member_indices)
    assert a.digest() == b.digest()
    assert a.to_dict()["digest"] == a.digest()


def test_matrix_space_net():
    rng = np.random.default_rng(1)
    P = rng.random((40, 2))
    M = np.sqrt(((P[:, None] - P[None]) ** 2).sum(-1))
    sp = SampledSpace.from_distance_matrix(M)
    net = build_maximal_net(sp, 0.3, seed=2)
    ref = net_invariants(P, net.member_indices, 0.3)
    assert ref["separated"] and ref["maximal"]
    assert all(check_net(sp, net).values())


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 200), st.floats(0.05, 0.6))
def test_random_clouds_against_brute_force(seed, n, eps):
    rng = np.random.default_rng(seed)
    sp = SampledSpace.from_points(rng.random((n, 2)))
    net = build_maximal_net(sp, eps, seed=seed)
    ref = net_invariants(sp.points, net.member_indices, eps)
    assert ref["separated"] and ref["maximal"]
    fine = refine_nested(sp, net)
    ref2 = net_invariants(sp.points, fine.member_indices, eps / 2)
    assert ref2["separated"] and ref2["maximal"]
    assert set(net.member_indices.tolist()) <= set(fine.member_indices.tolist())
