"""Convergence studies and lambda sweeps over the built-in mesh families."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from ..assembly import ElasticityProblem, LameParameters, assemble_global, recover_interior
from ..errors import BudgetExceeded
from ..mesh import GENERATORS
from ..solver import solve
from .cases import make_case
from .norms import error_norms, rates

CSV_HEADER = ["case", "k", "lambda", "level", "dofs", "err_u", "rate_u", "err_sigma",
              "rate_sigma", "err_gradu", "rate_gradu"]
DEFAULT_MESH = {"2d": "triangle", "3d": "cube"}


@dataclass
class LevelResult:
    case: str
    k: int
    lam: float
    level: int            # cells per direction, 2**exponent
    dofs: int             # skeleton dofs (before Dirichlet elimination)
    err_u: float
    err_sigma: float
    err_gradu: float
    residual: float
    definite: bool
    method: str
    expect_definite: bool
    symmetry: float       # max|K - K^T| / max|K|
    rate_u: float | None = None
    rate_sigma: float | None = None
    rate_gradu: float | None = None
    backward_error: float | None = None


@dataclass
class ConvergenceReport:
    rows: list = field(default_factory=list)

    def series(self, lam):
        return [r for r in self.rows if r.lam == lam]

    def final(self, lam):
        return self.series(lam)[-1]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([r.case, r.k, f"{r.lam:g}", r.level, r.dofs,
                        f"{r.err_u:.6e}", _fmt_rate(r.rate_u),
                        f"{r.err_sigma:.6e}", _fmt_rate(r.rate_sigma),
                        f"{r.err_gradu:.6e}", _fmt_rate(r.rate_gradu)])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def _fmt_rate(r):
    return "" if r is None else f"{r:.4f}"


def estimate_dofs(mesh_kind, k, n):
    """Skeleton dof count without building the mesh (exact for the generators)."""
    if mesh_kind == "triangle":
        v, e = (n + 1) ** 2, 3 * n * n + 2 * n
        nodes = v + k * e
        return 2 * nodes + (v if k + 1 < 2 else 0)
    if mesh_kind == "cube":
        v = (n + 1) ** 3
        e = 3 * n * (n + 1) ** 2 + 3 * n * n * (n + 1) + n ** 3
        f = 12 * n ** 3 + 6 * n ** 2
        nodes = v + k * e + math.comb(k, 2) * f
        return 3 * nodes + (v if k + 1 < 3 else 0)
    if mesh_kind == "ladder":
        # even rows: n cells; odd rows: n + 1 (half cells at both ends)
        top = n + 1 if (n - 1) % 2 == 0 else n + 2
        line_pts = [n + 1] + [2 * n + 1] * (n - 1) + [top]
        v = sum(line_pts)
        e = sum(p - 1 for p in line_pts) + sum(n + 1 + r % 2 for r in range(n))
        nodes = v + k * e
        return 2 * nodes + (v if k + 1 < 2 else 0)
    raise ValueError(f"unknown mesh family {mesh_kind!r}")


def run_level(case_name, k, lam, n, mesh_kind=None, mu=None, method="direct"):
    mesh_kind = mesh_kind or DEFAULT_MESH[case_name]
    return run_on_mesh(case_name, k, lam, GENERATORS[mesh_kind](n), mu, method, level=n)


def run_on_mesh(case_name, k, lam, mesh, mu=None, method="direct", level=0):
    """Solve the manufactured case on ``mesh`` and measure the errors."""
    case = make_case(case_name, lam, mu)
    if mesh.dim != case.dim:
        raise ValueError(f"case {case_name!r} is {case.dim}D but the mesh is {mesh.dim}D")
    problem = ElasticityProblem(LameParameters(case.mu, case.lam), k, f=case.f, g_D=case.g_D)
    system = assemble_global(mesh, problem)
    K = system.matrix
    scale = abs(K).max() if K.nnz else 1.0
    asym = float(abs(K - K.T).max() / scale) if K.nnz else 0.0
    x, report = solve(K, system.rhs, method=method)
    sol = recover_interior(system, x, mesh)
    eu, es, eg = error_norms(sol, case)
    return LevelResult(case_name, k, lam, level, system.dofmap.n_skeleton, eu, es, eg,
                       report.residual, report.definite, report.method,
                       system.expect_definite, asym, backward_error=report.backward_error)


def _run_job(args):
    return run_level(*args)


def default_jobs():
    try:
        return max(1, int(os.environ.get("WG_ELAST_JOBS", "1")))
    except ValueError:
        return 1


def convergence_study(case, k, lambdas, levels, mesh_kind=None, mu=None, budget=None,
                      jobs=None, method="direct"):
    """Run ``case`` at ``n = 2**L`` for each level ``L`` and each lambda.

    ``budget`` caps the estimated skeleton dof count of the finest level.
    """
    mesh_kind = mesh_kind or DEFAULT_MESH[case]
    levels = list(levels)
    if not levels:
        raise ValueError("levels must be nonempty")
    if budget is not None:
        est = estimate_dofs(mesh_kind, k, 2 ** max(levels))
        if est > budget:
            raise BudgetExceeded(f"estimated {est} dofs at level 2^{max(levels)} "
                                 f"exceeds budget {budget}")
    jobs = default_jobs() if jobs is None else max(1, jobs)
    tasks = [(case, k, lam, 2 ** L, mesh_kind, mu, method) for lam in lambdas for L in levels]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_job, tasks))
    else:
        results = [_run_job(t) for t in tasks]
    report = ConvergenceReport()
    for i, lam in enumerate(lambdas):
        chunk = results[i * len(levels):(i + 1) * len(levels)]
        for name in ("u", "sigma", "gradu"):
            for r, rate in zip(chunk, rates([getattr(r, f"err_{name}") for r in chunk])):
                setattr(r, f"rate_{name}", rate)
        report.rows.extend(chunk)
    return report


def lambda_sweep(case, k, level, mesh_kind=None, lambdas=(1.0, 1e6), mu=None):
    """Ratios ``err(lambda_max) / err(lambda_min)`` for u and sigma at mesh ``2**level``."""
    lo, hi = min(lambdas), max(lambdas)
    a = run_level(case, k, lo, 2 ** level, mesh_kind, mu)
    b = run_level(case, k, hi, 2 ** level, mesh_kind, mu) if hi != lo else a
    return {"ratio_u": b.err_u / a.err_u, "ratio_sigma": b.err_sigma / a.err_sigma,
            "low": asdict(a), "high": asdict(b)}
