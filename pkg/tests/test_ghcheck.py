from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from mmdisc.ghcheck import (build_dyadic_chain, chain_complexes, gh_condition_check,
                            multiscale_report, nearest_vertex_map, uniform_verdicts)
from mmdisc.graph import NetGraph
from mmdisc.onecomplex import build_complex
from mmdisc.spaces import make_euclidean_lattice


def origin_index(sp):
    return int(np.flatnonzero((sp.lattice_coords == 0).all(1))[0])


class TestNearestVertex:
    def setup_method(self):
        self.c = build_complex(NetGraph.from_adjacency(2, [(0, 1)], [1, 1], 1))

    def test_vertex(self):
        assert nearest_vertex_map(self.c, self.c.vertex(1)) == 1

    def test_near_lower(self):
        assert nearest_vertex_map(self.c, self.c.point(0, 0.2)) == 0

    def test_midpoint_tie(self):
        assert nearest_vertex_map(self.c, self.c.point(0, 0.5)) == 0

    def test_near_upper(self):
        assert nearest_vertex_map(self.c, self.c.point(0, 0.8)) == 1


@pytest.fixture(scope="module")
def setup():
    sp = make_euclidean_lattice(2, Fraction(1, 16), 80)
    return sp, chain_complexes(build_dyadic_chain(sp, 5, 1))


@pytest.fixture(scope="module")
def space():
    return make_euclidean_lattice(2, Fraction(1, 8), 112)


class TestGH:
    def test_fine_levels_pass(self, setup):
        sp, levels = setup
        rep = gh_condition_check(levels, sp, origin_index(sp), 4, 0.5, pairs=300)
        assert rep.L == 3.0
        for lv in rep.levels:
            assert lv.condition1_pass
            assert lv.vertex_pair_defect == 0.0
            assert lv.within_bound
            if lv.epsilon < 0.5 / (2 * rep.L):
                assert lv.passed
        first_bound = min(lv.level for lv in rep.levels if lv.epsilon < 0.5 / (2 * rep.L))
        assert rep.i0 is not None and rep.i0 <= first_bound
        assert all(lv.passed for lv in rep.levels[rep.i0:])

    def test_eta_must_be_below_r(self, setup):
        sp, levels = setup
        with pytest.raises(ValueError, match="eta"):
            gh_condition_check(levels, sp, origin_index(sp), 1, 1)

    def test_graph_mode_rejected(self, setup):
        sp, levels = setup
        with pytest.raises(ValueError):
            gh_condition_check([build_complex(levels[0].base)], sp, origin_index(sp), 4, 0.5)

    def test_missing_base_point(self, setup):
        sp, levels = setup
        off = int(np.flatnonzero((sp.lattice_coords == [1, 0]).all(1))[0])
        with pytest.raises(ValueError, match="nested"):
            gh_condition_check(levels, sp, off, 4, 0.5)


class TestMultiscale:
    def test_dyadic_uniform(self, space):
        rep = multiscale_report(space, 4, 1)
        assert all(rep.verdicts.values())
        assert rep.to_dict()["all_uniform"]
        masses = [lv.ball_masses["1.0"] for lv in rep.levels]
        # unit-disc masses for eps = 1, 1/2, 1/4, 1/8: counts 1, 9, 45, 193 from the Gauss oracle
        assert masses == pytest.approx([c * math.pi * e**2 for c, e in
                                        zip((1, 9, 45, 193), (1, 0.5, 0.25, 0.125))], rel=1e-12)

    def test_corrupted_level(self, space):
        rep = multiscale_report(space, 4, 1, mass_scale={2: 100})
        assert rep.verdicts["comparability"] is False
        assert rep.witnesses["comparability"] == 2

    def test_single_level(self, space):
        with pytest.raises(ValueError):
            multiscale_report(space, 1, 1)


def test_uniform_rule_flags_outlier():
    from mmdisc.ghcheck import LevelRecord
    recs = [LevelRecord(i, 2.0**-i, 10, 0.5 * 2.0**-i, 3.0, 2.0, 20.0, c, False, {})
            for i, c in enumerate([0.1, 0.1, 0.1, 5.0])]
    verdicts, consts, wit = uniform_verdicts(recs)
    assert not verdicts["poincare"] and wit["poincare"] == 3
    assert verdicts["doubling"] and consts["poincare"] == 5.0
