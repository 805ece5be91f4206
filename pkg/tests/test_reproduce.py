from __future__ import annotations

import math

import pytest

from mmdisc.reproduce import count_open_disc, reproduce_grid

from oracles import gauss_count_open


@pytest.mark.parametrize("R", [1, 2, 3, 4, 7, 8, 16, 33])
def test_disc_count_matches_double_loop(R):
    assert count_open_disc(R) == gauss_count_open(R)


def test_report():
    rep = reproduce_grid(range(3, 6), degree_levels=range(1, 3))
    rows = {r["level"]: r for r in rep["levels"]}
    assert rows[4]["count"] == 193 and rows[5]["count"] == 793
    assert rows[4]["mass"] == pytest.approx(193 * math.pi / 64, rel=1e-15)
    assert rows[3]["count"] == 45 and rows[3]["matches_published"] is False
    assert rep["discrepancies"] == [{"level": 3, "published": 43, "oracle": 45}]
    assert rows[5]["graph_ball_count"] == 793
    assert rep["pass"]


def test_level_range():
    with pytest.raises(ValueError):
        reproduce_grid([0, 1])
