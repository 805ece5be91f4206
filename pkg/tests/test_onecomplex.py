from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from mmdisc.analysis import distortion, estimate_doubling
from mmdisc.graph import NetGraph, build_graph
from mmdisc.net import build_maximal_net
from mmdisc.onecomplex import (ComplexMeasure, build_complex, complex_ball_mass,
                               complex_distance, complex_pi_check, linear_extension_energy,
                               mode_ratio_check)
from mmdisc.spaces import SampledSpace, make_euclidean_lattice

from oracles import dijkstra, subdivided_complex


def grid(scale, extent):
    sp = make_euclidean_lattice(2, scale, extent)
    return sp, build_graph(sp, build_maximal_net(sp, Fraction(scale), order="lattice"))


def single_edge(masses=(1.0, 2.0), eps=1.0):
    return NetGraph.from_adjacency(2, [(0, 1)], list(masses), eps)


class TestStructure:
    def test_single_edge(self):
        c = build_complex(single_edge())
        assert c.n_edges == 1 and c.eps == 1.0

    def test_handshake(self):
        _, g = grid(Fraction(1, 2), 6)
        assert build_complex(g).n_edges == g.degrees.sum() // 2

    def test_space_mode_vertex_distances_are_euclidean(self):
        sp, g = grid(Fraction(1, 2), 4)
        c = build_complex(g, "space")
        D = c.vertex_distances([0, 7])
        ref = np.linalg.norm(g.coords[[0, 7]][:, None] - g.coords[None], axis=2)
        assert np.allclose(D, ref, rtol=0, atol=1e-15)

    def test_endpoint_canonicalization(self):
        c = build_complex(single_edge())
        assert c.point(0, 0.0).edge is None and c.point(0, 1.0).vertex == 1
        with pytest.raises(ValueError):
            c.point(0, 1.5)


class TestDistance:
    def test_same_edge(self):
        c = build_complex(single_edge())
        assert complex_distance(c, c.point(0, 0.2), c.point(0, 0.7)) == pytest.approx(0.5)

    def test_vertex_to_midpoint(self):
        c = build_complex(single_edge(eps=0.5))
        assert complex_distance(c, c.vertex(0), c.point(0, 0.25)) == 0.25

    def test_midpoints_of_adjacent_edges(self):
        g = NetGraph.from_adjacency(3, [(0, 1), (1, 2)], [1, 1, 1], 1)
        c = build_complex(g)
        P, Q = c.point_between(1, 0, 0.5), c.point_between(1, 2, 0.5)
        # enumerate the four endpoint routings by hand: via 1 gives 1/2 + 0 + 1/2
        routes = [0.5 + 0 + 0.5, 0.5 + 1 + 0.5, 0.5 + 1 + 0.5, 0.5 + 2 + 0.5]
        assert complex_distance(c, P, Q) == min(routes) == 1.0

    def test_graph_mode_matches_subdivided_dijkstra(self):
        _, g = grid(1, 2)
        c = build_complex(g)
        N = 4
        adj = subdivided_complex(g.n_vertices, c.edges.tolist(), None, 1.0, N)
        rng = np.random.default_rng(0)
        for _ in range(40):
            e1, e2 = rng.integers(0, c.n_edges, 2)
            j1, j2 = rng.integers(1, N, 2)
            ref = dijkstra(adj, ("e", int(e1), int(j1)))[("e", int(e2), int(j2))]
            got = complex_distance(c, c.point(int(e1), j1 / N), c.point(int(e2), j2 / N))
            assert got == pytest.approx(ref, abs=1e-12)

    def test_space_mode_four_routings(self):
        sp, g = grid(Fraction(1, 2), 3)
        c = build_complex(g, "space")
        rng = np.random.default_rng(1)
        for _ in range(40):
            e1, e2 = (int(x) for x in rng.integers(0, c.n_edges, 2))
            t1, t2 = rng.uniform(0.05, 0.45, 2)
            a1, b1 = c.edges[e1]
            a2, b2 = c.edges[e2]
            best = math.inf
            for v, o in ((a1, t1), (b1, 0.5 - t1)):
                for w, o2 in ((a2, t2), (b2, 0.5 - t2)):
                    best = min(best, np.linalg.norm(g.coords[v] - g.coords[w]) + o + o2)
            if e1 == e2:
                best = min(best, abs(t1 - t2))
            assert complex_distance(c, c.point(e1, t1), c.point(e2, t2)) == \
                pytest.approx(best, abs=1e-12)


class TestMeasure:
    def test_edge_mass(self):
        cm = ComplexMeasure(build_complex(single_edge((1.0, 2.0))))
        assert cm.edge_mass(0) == 3.0

    def test_ball_with_one_full_edge(self):
        cm = ComplexMeasure(build_complex(single_edge((1.0, 2.0))))
        assert complex_ball_mass(cm, cm.complex.vertex(0), 1.5) == 3.0

    def test_quarter_radius_star(self):
        _, g = grid(Fraction(1, 4), 12)
        c = build_complex(g)
        cm = ComplexMeasure(c)
        v = int(np.argmin(np.linalg.norm(g.coords, axis=1)))
        eps = g.eps
        ref = sum((eps / 4) / eps * (g.masses[v] + g.masses[b]) for b in g.neighbors(v))
        assert complex_ball_mass(cm, c.vertex(v), eps / 4) == pytest.approx(ref, rel=1e-14)

    def test_doubling_finite(self):
        _, g = grid(Fraction(1, 2), 60)
        rep = estimate_doubling(ComplexMeasure(build_complex(g)), centers=16, seed=0)
        assert math.isfinite(rep.max_ratio) and rep.max_ratio >= 1


class TestEnergy:
    def test_equal_endpoints(self):
        c = build_complex(single_edge())
        res = linear_extension_energy(c, np.array([2.0, 2.0]), p=2)
        assert res.linear_energy == 0.0 and res.passed

    def test_unit_jump_p2(self):
        eps = 0.5
        c = build_complex(single_edge((1.0, 3.0), eps))
        res = linear_extension_energy(c, np.array([0.0, 1.0]), p=2)
        assert res.linear_energy == pytest.approx(4.0 / eps**2)
        assert res.passed

    def test_p1_total_variation(self):
        c = build_complex(single_edge())
        res = linear_extension_energy(c, np.array([0.0, 1.0]), p=1, perturbations=100)
        assert res.passed and res.min_excess >= 0

    def test_rejects_fractional_p(self):
        with pytest.raises(ValueError):
            linear_extension_energy(build_complex(single_edge()), np.zeros(2), p=1.5)


class TestComplexPI:
    def test_constant_suite_member(self):
        _, g = grid(Fraction(1, 2), 8)
        c = build_complex(g)
        v = int(np.argmin(np.linalg.norm(g.coords, axis=1)))
        est = complex_pi_check(c, ComplexMeasure(c), c.vertex(v), 1.0)
        assert est.suite_ratios["const"] == 0.0

    def test_small_ball_finite(self):
        _, g = grid(Fraction(1, 2), 8)
        c = build_complex(g)
        v = int(np.argmin(np.linalg.norm(g.coords, axis=1)))
        est = complex_pi_check(c, ComplexMeasure(c), c.vertex(v), 0.25, suite_size=4)
        assert 0 < est.suite_ratios["coord0"] < math.inf

    def test_factor_recorded(self):
        _, g = grid(Fraction(1, 2), 10)
        c = build_complex(g)
        v = int(np.argmin(np.linalg.norm(g.coords, axis=1)))
        est = complex_pi_check(c, ComplexMeasure(c), c.vertex(v), 1.5, suite_size=4)
        f = est.suite_ratios["factor_to_base"]
        assert math.isfinite(f) and f > 0


def test_mode_ratios_within_distortion():
    sp, g = grid(Fraction(1, 2), 8)
    L = distortion(sp, g, pairs="all").bilipschitz
    res = mode_ratio_check(build_complex(g), build_complex(g, "space"), pairs=300)
    assert 1 / L <= res["min_ratio"] and res["max_ratio"] <= L
