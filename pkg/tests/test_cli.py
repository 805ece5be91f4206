from __future__ import annotations

import json

import pytest

from mmdisc import __version__
from mmdisc.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_discretize_summary(capsys, tmp_path):
    code, out, _ = run(capsys, "discretize", "--space", "lattice:2:1/4:16", "--out",
                       str(tmp_path / "d"), "--emit-table")
    assert code == 0
    doc = json.loads(out)
    rep = doc["report"]
    assert rep["interior_degree_min"] == rep["interior_degree_max"] == 28
    assert rep["vertices"] == 33**2 and rep["epsilon"] == 0.25
    assert doc["version"] == __version__ and doc["config"]["command"] == "discretize"
    for name in ("summary.json", "net.json", "graph.json", "adjacency.csv"):
        assert (tmp_path / "d" / name).exists()


def test_discretize_is_byte_deterministic(capsys, tmp_path):
    rng_cloud = tmp_path / "c.csv"
    rng_cloud.write_text("\n".join(f"{i * 0.37 % 1:.6f},{i * 0.61 % 1:.6f}" for i in range(60)))
    args = ["discretize", "--space", f"cloud:{rng_cloud}", "--epsilon", "0.2", "--seed", "3",
            "--out", str(tmp_path / "o")]
    assert run(capsys, *args)[0] == 0
    first = {p.name: p.read_bytes() for p in (tmp_path / "o").iterdir()}
    assert run(capsys, *args)[0] == 0
    second = {p.name: p.read_bytes() for p in (tmp_path / "o").iterdir()}
    assert first == second


def test_empty_cloud_exit_2(capsys, tmp_path):
    f = tmp_path / "e.csv"
    f.write_text("")
    code, _, err = run(capsys, "discretize", "--space", f"cloud:{f}", "--epsilon", "1")
    assert code == 2 and "empty" in err


def test_missing_file_exit_2(capsys, tmp_path):
    code, _, _ = run(capsys, "discretize", "--space", f"cloud:{tmp_path / 'nope.csv'}",
                     "--epsilon", "1")
    assert code == 2


def test_bad_space_kind(capsys):
    assert run(capsys, "discretize", "--space", "torus:3")[0] == 2


def test_reproduce_grid(capsys):
    code, out, _ = run(capsys, "reproduce-grid", "--levels", "3-5")
    assert code == 0
    rep = json.loads(out)["report"]
    assert [r["count"] for r in rep["levels"]] == [45, 193, 793]


def test_poincare_path_three(capsys, tmp_path):
    f = tmp_path / "p3.csv"
    f.write_text("x,y\n0,0\n3,0\n6,0\n")
    code, out, _ = run(capsys, "poincare", "--space", f"cloud:{f}", "--epsilon", "1",
                       "--center", "1", "--radius", "2")
    assert code == 0
    rep = json.loads(out)["report"]
    assert rep["C_exact"] == pytest.approx(1 / 3, abs=1e-12)
    assert abs(rep["C_lower"] - rep["C_exact"]) <= 1e-9


def test_ghcheck_eta_validation(capsys):
    code, _, err = run(capsys, "ghcheck", "--space", "lattice:2:1/4:8", "--epsilon", "1",
                       "--r", "1", "--eta", "1")
    assert code == 2 and "eta" in err


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"space": "lattice:1:1:8", "epsilon": "2", "seed": 4}))
    code, out, _ = run(capsys, "discretize", "--config", str(cfg), "--epsilon", "1")
    assert code == 0
    doc = json.loads(out)
    assert doc["config"]["epsilon"] == "1" and doc["config"]["seed"] == 4
    assert doc["report"]["interior_degree_max"] == 6


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"space": "lattice:1:1:8", "colour": 1}))
    assert run(capsys, "discretize", "--config", str(cfg))[0] == 2


def test_multiscale_small(capsys, tmp_path):
    out = tmp_path / "m.json"
    code, _, _ = run(capsys, "multiscale", "--space", "lattice:2:1/4:56", "--epsilon", "1",
                     "--levels", "3", "--out", str(out), "--emit-table")
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["report"]["all_uniform"]
    assert (tmp_path / "m.table.csv").exists()


def test_unknown_flag_is_validation_error(capsys):
    assert run(capsys, "discretize", "--bogus")[0] == 2
