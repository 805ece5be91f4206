"""Command-line front end: ``mmdisc <command> [options]``.

Commands
--------
discretize      net and graph of one space at one scale
reproduce-grid  unit-disc counts and checks on dyadic plane grids
multiscale      five-condition report over a nested dyadic chain
poincare        Poincare constant estimate on one ball
ghcheck         pointed GH conditions over a nested dyadic chain

Space specs are ``lattice:D:SCALE:EXTENT[:empirical]``, ``sierpinski:LEVEL``
and ``cloud:PATH[:weighted]``.  Reports are canonical JSON (sorted keys) and
embed the run configuration and library version, so identical configs give
byte-identical output.  Exit codes: 0 success, 1 internal error, 2 invalid
input, 3 a built-in check failed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from ._util import as_fraction, dumps
from .graph import build_graph
from .ghcheck import build_dyadic_chain, chain_complexes, gh_condition_check, multiscale_report
from .net import build_maximal_net, check_net
from .poincare import estimate_constant_lower
from .reproduce import reproduce_grid
from .spaces import (BallSpec, SampledSpace, load_point_cloud, make_euclidean_lattice,
                     sierpinski_prefractal)

EXIT_OK, EXIT_INTERNAL, EXIT_INVALID, EXIT_CHECK = 0, 1, 2, 3
COMMANDS = ("discretize", "reproduce-grid", "multiscale", "poincare", "ghcheck")


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on; serialized into every report."""

    command: str
    space: str | None = None
    epsilon: str | None = None
    levels: str | None = None
    p: float = 1.0
    lam: float = 1.0
    seed: int = 0
    suite_size: int = 16
    centers: int = 16
    pairs: int = 500
    center: int | None = None
    radius: str | None = None
    r: float = 4.0
    eta: float = 0.5
    out: str | None = None
    emit_table: bool = False

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if self.command != "reproduce-grid" and not self.space:
            raise ValidationError("--space is required")
        if self.epsilon is not None:
            try:
                if as_fraction(self.epsilon) <= 0:
                    raise ValidationError("epsilon must be positive")
            except (TypeError, ValueError, ZeroDivisionError) as exc:
                raise ValidationError(f"bad epsilon {self.epsilon!r}: {exc}") from None
        if self.p < 1:
            raise ValidationError("p must be at least 1")
        if self.lam < 1:
            raise ValidationError("lambda must be at least 1")
        if self.suite_size < 1 or self.centers < 1 or self.pairs < 1:
            raise ValidationError("sample sizes must be positive")
        if self.command == "ghcheck" and not 0 < self.eta < self.r:
            raise ValidationError("ghcheck needs 0 < eta < r")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def parse_levels(text: str | None, default) -> list[int]:
    """``"3-8"``, ``"3,5,7"`` or a single integer."""
    if text is None:
        return list(default)
    try:
        text = str(text).strip()
        if "-" in text:
            a, b = text.split("-", 1)
            return list(range(int(a), int(b) + 1))
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise ValidationError(f"bad levels {text!r}") from None


def level_count(text: str | None, default: int) -> int:
    if text is None:
        return default
    try:
        n = int(text)
    except ValueError:
        raise ValidationError("levels must be a single integer for this command") from None
    if n < 1:
        raise ValidationError("levels must be positive")
    return n


def parse_space(spec: str) -> tuple[SampledSpace, Fraction | None]:
    """Build the space and a default epsilon from a space spec string."""
    kind, _, rest = spec.partition(":")
    try:
        if kind == "lattice":
            parts = rest.split(":")
            if len(parts) not in (3, 4):
                raise ValidationError("lattice spec is lattice:D:SCALE:EXTENT[:empirical]")
            mk = "lebesgue-analytic"
            if len(parts) == 4:
                if parts[3] != "empirical":
                    raise ValidationError(f"unknown lattice option {parts[3]!r}")
                mk = "empirical-counting"
            sp = make_euclidean_lattice(int(parts[0]), parts[1], int(parts[2]), mk)
            return sp, sp.lattice_scale
        if kind == "sierpinski":
            level = int(rest)
            return sierpinski_prefractal(level), Fraction(1, 2**level)
        if kind == "cloud":
            path, _, opt = rest.partition(":")
            if opt not in ("", "weighted"):
                raise ValidationError(f"unknown cloud option {opt!r}")
            mk = "empirical-weighted" if opt else "empirical-counting"
            return load_point_cloud(path, mk), None
    except OSError as exc:
        raise ValidationError(f"cannot read point cloud: {exc}") from None
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    raise ValidationError(f"unknown space kind {kind!r}")


def _epsilon(cfg: RunConfig, default: Fraction | None) -> Fraction:
    if cfg.epsilon is not None:
        return as_fraction(cfg.epsilon)
    if default is None:
        raise ValidationError("--epsilon is required for point clouds")
    return default


def _origin_index(space: SampledSpace, candidates=None) -> int:
    idx = np.arange(space.n) if candidates is None else np.asarray(candidates)
    return int(idx[np.argmin(np.linalg.norm(space.points[idx], axis=1))])


# commands ------------------------------------------------------------------

def cmd_discretize(cfg: RunConfig) -> tuple[dict, dict, int]:
    space, eps0 = parse_space(cfg.space)
    eps = _epsilon(cfg, eps0)
    order = "lattice" if space.is_lattice else "shuffle"
    net = build_maximal_net(space, eps, seed=cfg.seed, order=order)
    g = build_graph(space, net)
    checks = check_net(space, net)
    interior = g.boundary_margin >= 3 * g.eps
    deg = g.degrees
    summary = {
        "space": space.describe(), "epsilon": float(eps), "epsilon_exact": str(eps),
        "vertices": g.n_vertices, "edges": g.n_edges,
        "max_degree": int(deg.max()) if g.n_vertices else 0,
        "interior_vertices": int(interior.sum()),
        "interior_degree_min": int(deg[interior].min()) if interior.any() else None,
        "interior_degree_max": int(deg[interior].max()) if interior.any() else None,
        "components": int(g.components.max() + 1) if g.n_vertices else 0,
        "tie_count": int(g.tie_count), "net_checks": checks,
    }
    files = {"net.json": net.to_dict(), "graph.json": g.to_dict()}
    if cfg.emit_table:
        files["adjacency.csv"] = g.adjacency_csv()
    code = EXIT_OK if all(checks.values()) else EXIT_CHECK
    return summary, files, code


def cmd_reproduce_grid(cfg: RunConfig) -> tuple[dict, dict, int]:
    levels = parse_levels(cfg.levels, range(3, 9))
    if min(levels) < 1 or max(levels) > 12:
        raise ValidationError("levels must lie in 1..12")
    rep = reproduce_grid(levels, seed=cfg.seed)
    files = {}
    if cfg.emit_table:
        files["table.csv"] = _csv([{k: r.get(k) for k in ("level", "epsilon", "count", "mass",
                                                           "gap_to_pi_squared", "published_count")}
                                   for r in rep["levels"]])
    return rep, files, EXIT_OK if rep["pass"] else EXIT_CHECK


def cmd_multiscale(cfg: RunConfig) -> tuple[dict, dict, int]:
    space, eps0 = parse_space(cfg.space)
    eps = _epsilon(cfg, eps0)
    n = level_count(cfg.levels, 4)
    if n < 2:
        raise ValidationError("multiscale needs at least two levels")
    rep = multiscale_report(space, n, eps, seeds=cfg.seed, p=cfg.p, lam=cfg.lam,
                            centers=cfg.centers)
    out = rep.to_dict()
    files = {}
    if cfg.emit_table:
        files["table.csv"] = _csv([{k: v for k, v in vars(lv).items() if k != "ball_masses"}
                                   for lv in rep.levels])
    return out, files, EXIT_OK if out["all_uniform"] else EXIT_CHECK


def cmd_poincare(cfg: RunConfig) -> tuple[dict, dict, int]:
    space, eps0 = parse_space(cfg.space)
    eps = _epsilon(cfg, eps0)
    order = "lattice" if space.is_lattice else "shuffle"
    g = build_graph(space, build_maximal_net(space, eps, seed=cfg.seed, order=order))
    if cfg.center is None:
        cv = g.vertex_of(_origin_index(space, g.vertex_points))
    else:
        if not 0 <= cfg.center < space.n:
            raise ValidationError("center must be a point index of the space")
        try:
            cv = g.vertex_of(cfg.center)
        except KeyError:
            raise ValidationError("center is not a net point at this epsilon") from None
    radius = 2 * eps if cfg.radius is None else as_fraction(cfg.radius)
    if radius <= 0:
        raise ValidationError("radius must be positive")
    est = estimate_constant_lower(g, BallSpec(int(cv), float(radius)), cfg.lam, cfg.p,
                                  suite_size=cfg.suite_size, seed=cfg.seed)
    out = est.to_dict()
    out["center_point"] = int(g.vertex_points[cv])
    out["epsilon"] = float(eps)
    ok = est.C_exact is None or est.C_lower <= est.C_exact + 1e-9
    out["oracle_consistent"] = ok
    files = {}
    if cfg.emit_table:
        files["table.csv"] = _csv([{"function": k, "ratio": v}
                                   for k, v in sorted(est.suite_ratios.items())])
    return out, files, EXIT_OK if ok else EXIT_CHECK


def cmd_ghcheck(cfg: RunConfig) -> tuple[dict, dict, int]:
    space, eps0 = parse_space(cfg.space)
    if cfg.epsilon is None:
        raise ValidationError("--epsilon (coarsest scale) is required for ghcheck")
    eps = _epsilon(cfg, eps0)
    n = level_count(cfg.levels, 4)
    graphs = build_dyadic_chain(space, n, eps, seed=cfg.seed)
    q = int(graphs[0].vertex_points[np.argmin(
        np.linalg.norm(space.points[graphs[0].vertex_points], axis=1))])
    rep = gh_condition_check(chain_complexes(graphs), space, q, cfg.r, cfg.eta,
                             pairs=cfg.pairs, seed=cfg.seed)
    out = rep.to_dict()
    out["base_point"] = q
    files = {}
    if cfg.emit_table:
        files["table.csv"] = _csv(out["levels"])
    return out, files, EXIT_OK if rep.i0 is not None else EXIT_CHECK


HANDLERS = {"discretize": cmd_discretize, "reproduce-grid": cmd_reproduce_grid,
            "multiscale": cmd_multiscale, "poincare": cmd_poincare, "ghcheck": cmd_ghcheck}


# plumbing ------------------------------------------------------------------

def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields")
    common.add_argument("--space", help="space spec, e.g. lattice:2:1/4:16")
    common.add_argument("--epsilon", help="scale (rational, e.g. 1/4)")
    common.add_argument("--levels", help="level count, or a range like 3-8")
    common.add_argument("--p", type=float)
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--suite-size", dest="suite_size", type=int)
    common.add_argument("--centers", type=int)
    common.add_argument("--pairs", type=int)
    common.add_argument("--center", type=int, help="ball center as a space point index")
    common.add_argument("--radius", help="ball radius (absolute)")
    common.add_argument("--r", type=float, help="GH ball radius")
    common.add_argument("--eta", type=float, help="GH tolerance")
    common.add_argument("--out", help="output file (directory for discretize)")
    common.add_argument("--emit-table", dest="emit_table", action="store_true", default=None)
    parser = argparse.ArgumentParser(prog="mmdisc", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"mmdisc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def make_config(args: argparse.Namespace) -> RunConfig:
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    values: dict = {}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config: {exc}") from None
        if not isinstance(loaded, dict):
            raise ValidationError("config must be a JSON object")
        if "lambda" in loaded:
            loaded["lam"] = loaded.pop("lambda")
        unknown = set(loaded) - fields
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        if loaded.get("command", args.command) != args.command:
            raise ValidationError("config command does not match the subcommand")
        values.update(loaded)
    for name in fields - {"command"}:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    values["command"] = args.command
    for key in ("epsilon", "radius", "levels"):
        if values.get(key) is not None:
            values[key] = str(values[key])
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ValidationError(str(exc)) from None
    return cfg.validate()


def _emit(cfg: RunConfig, report: dict, files: dict) -> None:
    doc = {"config": cfg.to_dict(), "version": __version__, "report": report}
    text = dumps(doc)
    if cfg.command == "discretize" and cfg.out:
        d = Path(cfg.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / "summary.json").write_text(text, encoding="utf-8")
        for name, body in files.items():
            (d / name).write_text(body if isinstance(body, str) else dumps(body),
                                  encoding="utf-8")
        sys.stdout.write(text)
        return
    if cfg.out:
        path = Path(cfg.out)
        path.write_text(text, encoding="utf-8")
        for name, body in files.items():
            path.with_name(f"{path.stem}.{name}").write_text(body, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        cfg = make_config(args)
        report, files, code = HANDLERS[cfg.command](cfg)
        _emit(cfg, report, files)
        return code
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
