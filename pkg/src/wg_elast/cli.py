"""Command-line entry point: ``wg-elast {solve,convergence,check-mesh,selftest}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

from .errors import WgError
from .mesh import GENERATORS, check_regularity, read_mesh
from .verify import (
    CSV_HEADER,
    DEFAULT_MESH,
    DEFAULT_MU,
    ConvergenceReport,
    convergence_study,
    run_on_mesh,
    run_selftest,
    summarize,
)

COMMANDS = ("solve", "convergence", "check-mesh", "selftest")


@dataclass
class RunConfig:
    command: str
    case: str = "2d"
    mesh: str | None = None          # generator family
    file: str | None = None          # mesh file, overrides the generator
    k: int = 0
    mu: float | None = None
    lambdas: list = field(default_factory=lambda: [1.0])
    levels: list = field(default_factory=lambda: [2])
    out: str | None = None
    method: str = "direct"
    budget: int | None = None
    jobs: int | None = None
    rate_u: tuple | None = None      # (lo, hi) bounds on the final rate
    rate_sigma: tuple | None = None
    max_residual: float | None = None
    require_definite: bool = False

    def validate(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.mu is not None and not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.lambdas or any(not lam > 0 for lam in self.lambdas):
            raise ValueError("lambda values must be positive")
        if not self.levels:
            raise ValueError("levels must be nonempty")
        if self.mesh is not None and self.mesh not in GENERATORS:
            raise ValueError(f"unknown mesh family {self.mesh!r}")


def parse_levels(text):
    """``"2..7"`` (inclusive) or ``"2,3,5"``."""
    text = str(text).strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ValueError(f"empty level range {text!r}")
        return list(range(lo, hi + 1))
    return [int(t) for t in text.split(",") if t.strip()]


def parse_floats(text):
    if isinstance(text, (list, tuple)):
        return [float(t) for t in text]
    return [float(t) for t in str(text).split(",") if t.strip()]


def parse_bounds(text):
    vals = parse_floats(text)
    if len(vals) == 1:
        return (vals[0], float("inf"))
    if len(vals) != 2:
        raise ValueError(f"expected LO or LO,HI, got {text!r}")
    return tuple(vals)


def build_parser():
    p = argparse.ArgumentParser(prog="wg-elast",
                                description="Weak Galerkin stress-displacement elasticity solver.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON file with the same keys as the long flags")
    p.add_argument("--case", choices=sorted(DEFAULT_MU))
    p.add_argument("--mesh", choices=sorted(GENERATORS), help="generated mesh family")
    p.add_argument("--file", help="mesh file (wgmesh text format)")
    p.add_argument("--k", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--lambda", dest="lambdas", help="comma-separated list, e.g. 1,1e3,1e6")
    p.add_argument("--levels", help="exponents L with n = 2**L: '2..7' or '2,3,4'")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--method", choices=("direct", "cg"))
    p.add_argument("--budget", type=int, help="cap on skeleton dofs at the finest level")
    p.add_argument("--jobs", type=int, help="worker processes (default $WG_ELAST_JOBS or 1)")
    p.add_argument("--assert-rate-u", dest="rate_u", metavar="LO[,HI]")
    p.add_argument("--assert-rate-sigma", dest="rate_sigma", metavar="LO[,HI]")
    p.add_argument("--assert-residual", dest="max_residual", type=float, metavar="TOL")
    p.add_argument("--assert-definite", dest="require_definite", action="store_true",
                   default=None)
    return p


def make_config(args):
    merged = {}
    if args.config:
        with open(args.config) as fh:
            merged.update(json.load(fh))
    flags = {k: v for k, v in vars(args).items() if v is not None and k != "config"}
    merged.update(flags)
    if "lambda" in merged:
        merged["lambdas"] = merged.pop("lambda")
    unknown = set(merged) - set(RunConfig.__dataclass_fields__)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "lambdas" in merged:
        merged["lambdas"] = parse_floats(merged["lambdas"])
    if "levels" in merged:
        lv = merged["levels"]
        merged["levels"] = [int(x) for x in lv] if isinstance(lv, list) else parse_levels(lv)
    for key in ("rate_u", "rate_sigma"):
        if merged.get(key) is not None:
            merged[key] = parse_bounds(merged[key])
    cfg = RunConfig(**merged)
    cfg.validate()
    return cfg


def _emit(text, path):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _check_assertions(cfg, report):
    failures = []
    for lam in dict.fromkeys(r.lam for r in report.rows):
        last = report.final(lam)
        for name, bounds in (("rate_u", cfg.rate_u), ("rate_sigma", cfg.rate_sigma)):
            if bounds is None:
                continue
            val = getattr(last, name)
            if val is None or not bounds[0] <= val <= bounds[1]:
                failures.append(f"lambda={lam:g}: final {name} {val} outside {bounds}")
    for r in report.rows:
        if cfg.max_residual is not None and not r.residual < cfg.max_residual:
            failures.append(f"lambda={r.lam:g} n={r.level}: residual {r.residual:.2e}")
        if cfg.require_definite and not r.definite:
            failures.append(f"lambda={r.lam:g} n={r.level}: system not certified definite")
    return failures


def _cmd_convergence(cfg):
    report = convergence_study(cfg.case, cfg.k, cfg.lambdas, cfg.levels, mesh_kind=cfg.mesh,
                               mu=cfg.mu, budget=cfg.budget, jobs=cfg.jobs, method=cfg.method)
    _emit(report.to_csv(), cfg.out)
    for r in report.rows:
        print(f"# lambda={r.lam:g} n={r.level} dofs={r.dofs} residual={r.residual:.2e} "
              f"backward_error={r.backward_error:.1e} definite={r.definite} method={r.method}", file=sys.stderr)
    return report


def _cmd_solve(cfg):
    if cfg.file:
        mesh = read_mesh(cfg.file)
        levels = [0]
    else:
        kind = cfg.mesh or DEFAULT_MESH[cfg.case]
        levels = [2 ** L for L in cfg.levels]
    report = ConvergenceReport()
    for lam in cfg.lambdas:
        for n in levels:
            if not cfg.file:
                mesh = GENERATORS[kind](n)
            report.rows.append(run_on_mesh(cfg.case, cfg.k, lam, mesh, cfg.mu, cfg.method,
                                           level=n))
    _emit(report.to_csv(), cfg.out)
    return report


def _cmd_check_mesh(cfg):
    if cfg.file:
        mesh = read_mesh(cfg.file)
    else:
        mesh = GENERATORS[cfg.mesh or DEFAULT_MESH[cfg.case]](2 ** cfg.levels[0])
    rep = check_regularity(mesh)
    print(f"dimension        {mesh.dim}")
    print(f"vertices         {mesh.n_vertices}")
    print(f"proper faces     {mesh.n_faces}")
    print(f"skeleton faces   {mesh.n_skel}")
    print(f"h                {mesh.h:.6g}")
    print(rep.summary())
    return rep


def run(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        cfg = make_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        parser.print_usage(sys.stderr)
        print(f"wg-elast: error: {exc}", file=sys.stderr)
        return 1
    if cfg.jobs is not None:
        os.environ["WG_ELAST_JOBS"] = str(cfg.jobs)
    try:
        if cfg.command == "selftest":
            results = run_selftest()
            for r in results:
                print(r.line())
            passed, failed = summarize(results)
            print(f"{passed} passed, {failed} failed")
            return 2 if failed else 0
        if cfg.command == "check-mesh":
            _cmd_check_mesh(cfg)
            return 0
        report = _cmd_convergence(cfg) if cfg.command == "convergence" else _cmd_solve(cfg)
    except (WgError, ValueError, OSError) as exc:
        print(f"wg-elast: error: {exc}", file=sys.stderr)
        return 1
    failures = _check_assertions(cfg, report)
    for f in failures:
        print(f"assertion failed: {f}", file=sys.stderr)
    return 2 if failures else 0


def main(argv=None):
    sys.exit(run(sys.argv[1:] if argv is None else argv))


__all__ = ["CSV_HEADER", "RunConfig", "build_parser", "main", "make_config", "parse_levels", "run"]
