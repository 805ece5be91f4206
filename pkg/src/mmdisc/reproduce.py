"""Worked example on dyadic plane grids ``eps_i Z^2`` with ``eps_i = 2**(1 - i)``.

The unit-disc masses ``count_i * pi * eps_i**2`` are computed by exact
lattice counting, and the structural claims (degree 28, doubling below
7128 = 28 * 4**4, hop distance from the origin to ``(0, 1)``) are checked on
the corresponding graphs.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .analysis import estimate_doubling, theoretical_bounds
from .graph import build_graph, euclidean_ball_vertices, graph_distance
from .net import build_maximal_net
from .spaces import make_euclidean_lattice

PUBLISHED_COUNTS = {3: 43, 4: 193, 5: 793}
PUBLISHED_UNIT_DISTANCE = 0.5
DEGREE = 28
DOUBLING_BOUND = 7128


def level_epsilon(level: int) -> Fraction:
    return Fraction(1, 2 ** (level - 1))


def count_open_disc(radius_units: int) -> int:
    """Lattice points ``(j, k)`` with ``j^2 + k^2 < R^2``, by exact integer sweep."""
    R2 = radius_units * radius_units
    total = 0
    for j in range(-radius_units, radius_units + 1):
        rest = R2 - j * j
        if rest > 0:
            total += 2 * math.isqrt(rest - 1) + 1
    return total


def dyadic_graph(level: int, extent_units: int):
    eps = level_epsilon(level)
    space = make_euclidean_lattice(2, eps, extent_units)
    return space, build_graph(space, build_maximal_net(space, eps, order="lattice"))


def _origin(space) -> int:
    return int(np.flatnonzero(np.all(space.lattice_coords == 0, axis=1))[0])


def reproduce_grid(levels=range(3, 9), degree_levels=range(1, 7), doubling_level: int = 3,
                   graph_check_max_level: int = 5, seed: int = 0) -> dict:
    """Counts, masses and structural checks for the dyadic grid example.

    Returns a JSON-ready dict.  ``acceptance`` collects the boolean checks:
    exact counts at levels 4 and 5, monotone approach toward ``pi**2``,
    degree 28 on interior vertices and the doubling bound 7128.
    """
    levels = list(levels)
    if not levels or min(levels) < 1 or max(levels) > 12:
        raise ValueError("levels must lie in 1..12")
    rows = []
    for i in levels:
        eps = level_epsilon(i)
        R = 2 ** (i - 1)
        count = count_open_disc(R)
        mass = count * math.pi * float(eps) ** 2
        row = {"level": i, "epsilon": float(eps), "count": count, "mass": mass,
               "mass_over_pi": count * float(eps) ** 2, "gap_to_pi_squared": math.pi**2 - mass,
               "published_count": PUBLISHED_COUNTS.get(i),
               "matches_published": None if i not in PUBLISHED_COUNTS else count == PUBLISHED_COUNTS[i]}
        if i <= graph_check_max_level:
            space, g = dyadic_graph(i, R + 3)
            o = g.vertex_of(_origin(space))
            ball = euclidean_ball_vertices(g, o, 1)
            row["graph_ball_count"] = int(len(ball))
            row["graph_ball_mass"] = float(g.masses[ball].sum())
            j = g.vertex_of(int(np.flatnonzero((space.lattice_coords == [0, R]).all(axis=1))[0]))
            row["hop_distance_origin_to_(0,1)"] = graph_distance(g, o, j)
        rows.append(row)
    masses = [r["mass"] for r in rows]
    monotone = all(b >= a for a, b in zip(masses, masses[1:]))
    below = all(m <= math.pi**2 * (1 + 1e-9) for m in masses)
    degrees = {}
    for i in degree_levels:
        space, g = dyadic_graph(i, 12)
        inner = g.boundary_margin >= 3 * g.eps
        deg = g.degrees[inner]
        degrees[str(i)] = {"interior_vertices": int(inner.sum()), "min": int(deg.min()),
                           "max": int(deg.max()), "all_28": bool(np.all(deg == DEGREE))}
    space, g = dyadic_graph(doubling_level, 56)
    dbl = estimate_doubling(g, centers=64, seed=seed,
                            theoretical_bound=theoretical_bounds(4, 1).C_m_bound)
    by_level = {r["level"]: r for r in rows}
    checks = {
        "count_level4_193": by_level.get(4, {}).get("count") == 193 if 4 in by_level else None,
        "count_level5_793": by_level.get(5, {}).get("count") == 793 if 5 in by_level else None,
        "masses_nondecreasing": monotone,
        "masses_below_pi_squared": below,
        "interior_degree_28": all(d["all_28"] for d in degrees.values()),
        "doubling_below_7128": dbl.max_ratio <= DOUBLING_BOUND,
        "doubling_below_theoretical": dbl.max_ratio <= theoretical_bounds(4, 1).C_m_bound,
    }
    discrepancies = [
        {"level": r["level"], "published": r["published_count"], "oracle": r["count"]}
        for r in rows if r["matches_published"] is False
    ]
    return {
        "ball": "open Euclidean unit disc at the origin, vertices of eps_i Z^2",
        "levels": rows,
        "pi_squared": math.pi**2,
        "degrees": degrees,
        "doubling": dbl.to_dict(),
        "published_unit_distance": PUBLISHED_UNIT_DISTANCE,
        "discrepancies": discrepancies,
        "acceptance": checks,
        "pass": all(v for v in checks.values() if v is not None),
    }
