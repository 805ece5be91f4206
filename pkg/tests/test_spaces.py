from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmdisc.spaces import (BallSpec, SampledSpace, ball_measure, load_point_cloud,
                           make_euclidean_lattice, sierpinski_prefractal)

from oracles import sierpinski_vertices


class TestLattice:
    def test_plane_quarter_scale(self):
        sp = make_euclidean_lattice(2, "1/4", 16)
        assert sp.n == 33**2
        assert sp.lattice_scale == Fraction(1, 4)
        assert sp.points.min() == -4.0 and sp.points.max() == 4.0
        assert sp.quasiconvexity_L == 1.0

    def test_integer_lattice(self):
        assert make_euclidean_lattice(2, 1, 4).n == 81

    def test_line(self):
        sp = make_euclidean_lattice(1, Fraction(1, 2), 2)
        assert sorted(sp.points[:, 0].tolist()) == [-1.0, -0.5, 0.0, 0.5, 1.0]

    @pytest.mark.parametrize("args", [(2, 0, 3), (2, -1, 3), (2, 1, 0), (4, 1, 2)])
    def test_rejects_bad_arguments(self, args):
        with pytest.raises(ValueError):
            make_euclidean_lattice(*args)

    def test_coordinates_are_exact_multiples(self):
        sp = make_euclidean_lattice(3, "1/8", 3)
        assert np.array_equal(sp.lattice_coords * 0.125, sp.points)


class TestBallMeasure:
    def test_analytic_disc(self):
        sp = make_euclidean_lattice(2, "1/4", 8)
        assert ball_measure(sp, BallSpec(0, Fraction(1, 4))) == pytest.approx(math.pi / 16, rel=1e-15)
        assert ball_measure(sp, BallSpec(5, 1)) == pytest.approx(math.pi, rel=1e-15)

    def test_empirical_counting(self):
        sp = SampledSpace.from_points(np.array([[0.0], [1.0], [5.0], [9.0], [20.0]]))
        assert ball_measure(sp, BallSpec(0, 2)) == pytest.approx(2 / 5)

    def test_strict_inequality(self):
        sp = SampledSpace.from_points(np.array([[0.0], [1.0], [2.0]]))
        assert ball_measure(sp, BallSpec(0, 1)) == pytest.approx(1 / 3)

    def test_analytic_needs_full_space(self):
        sp = SampledSpace(points=np.zeros((1, 2)), measure_kind="lebesgue-analytic")
        with pytest.raises(ValueError, match="empirical"):
            ball_measure(sp, BallSpec(0, 1))

    def test_bounded_lattice_uses_counting(self):
        sp = make_euclidean_lattice(1, 1, 2, measure_kind="empirical-counting")
        assert ball_measure(sp, BallSpec(2, 1.5)) == pytest.approx(3 / 5)

    def test_ball_spec_rejects_nonpositive_radius(self):
        with pytest.raises(ValueError):
            BallSpec(0, 0)


class TestSierpinski:
    def test_level_one(self):
        assert sierpinski_prefractal(1).n == 6

    @pytest.mark.parametrize("level", [1, 2, 3, 4])
    def test_matches_recursive_oracle(self, level):
        sp = sierpinski_prefractal(level)
        ref = sierpinski_vertices(level)
        assert sp.n == len(ref)
        pts = {(round(float(a + b / 2), 12), round(float(b) * math.sqrt(3) / 2, 12))
               for a, b in ref}
        got = {(round(x, 12), round(y, 12)) for x, y in sp.points}
        assert got == pts

    def test_level_two_count(self):
        # frozen from the recursive oracle
        assert sierpinski_prefractal(2).n == 15

    @pytest.mark.parametrize("level", [0, 11, 1.5])
    def test_level_out_of_range(self, level):
        with pytest.raises(ValueError):
            sierpinski_prefractal(level)


class TestPointCloud:
    def test_triangle(self, tmp_path):
        f = tmp_path / "t.csv"
        f.write_text("x,y\n0,0\n1,0\n0.5,0.8660254037844386\n")
        sp = load_point_cloud(f)
        assert sp.n == 3
        assert np.allclose(sp.weights, 1 / 3)

    def test_duplicate_rejected(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("0,0\n1,1\n0,0\n")
        with pytest.raises(ValueError, match="duplicate point"):
            load_point_cloud(f)

    def test_weighted_normalized(self, tmp_path):
        f = tmp_path / "w.csv"
        f.write_text("0,0,1\n1,0,2\n0,1,3\n")
        sp = load_point_cloud(f, "empirical-weighted")
        assert np.allclose(sp.weights, [1 / 6, 2 / 6, 3 / 6])
        assert sp.dim == 2

    def test_malformed_row_names_line(self, tmp_path):
        f = tmp_path / "m.csv"
        f.write_text("# comment\n0,0\n1,x\n")
        with pytest.raises(ValueError, match="line 3"):
            load_point_cloud(f)

    def test_ragged_row(self, tmp_path):
        f = tmp_path / "r.csv"
        f.write_text("0,0\n1,1,1\n")
        with pytest.raises(ValueError, match="line 2"):
            load_point_cloud(f)

    def test_empty(self, tmp_path):
        f = tmp_path / "e.csv"
        f.write_text("# nothing\n")
        with pytest.raises(ValueError, match="empty"):
            load_point_cloud(f)


class TestDistances:
    def test_matrix_space(self):
        M = np.array([[0, 1, 2], [1, 0, 1.5], [2, 1.5, 0]])
        sp = SampledSpace.from_distance_matrix(M)
        assert sp.distance(0, 2) == 2
        I, J = sp.pairs_within(1.5, "le")
        assert list(zip(I, J)) == [(0, 1), (1, 2)]

    def test_matrix_rejects_zero_off_diagonal(self):
        with pytest.raises(ValueError, match="duplicate"):
            SampledSpace.from_distance_matrix(np.array([[0, 0], [0, 0]]))

    def test_lattice_compare_is_exact_at_threshold(self):
        sp = make_euclidean_lattice(2, "1/3", 4)
        i = int(np.flatnonzero((sp.lattice_coords == [0, 0]).all(1))[0])
        j = int(np.flatnonzero((sp.lattice_coords == [3, 0]).all(1))[0])
        assert sp.compare([i], [j], 1, "le")[0]
        assert not sp.compare([i], [j], 1, "lt")[0]

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31), st.integers(2, 40))
    def test_metric_axioms_on_random_clouds(self, seed, n):
        rng = np.random.default_rng(seed)
        sp = SampledSpace.from_points(rng.normal(size=(n, 2)))
        i, j = rng.integers(0, n, 50), rng.integers(0, n, 50)
        d = sp.distances(i, j)
        assert np.array_equal(d, sp.distances(j, i))
        assert np.all(d >= 0)
        assert np.all((d == 0) == (i == j))

    def test_pairs_within_matches_brute_force(self):
        rng = np.random.default_rng(3)
        sp = SampledSpace.from_points(rng.random((80, 2)))
        I, J = sp.pairs_within(0.2, "lt")
        D = np.sqrt(((sp.points[:, None] - sp.points[None]) ** 2).sum(-1))
        a, b = np.nonzero(np.triu(D < 0.2, k=1))
        assert set(zip(I.tolist(), J.tolist())) == set(zip(a.tolist(), b.tolist()))
