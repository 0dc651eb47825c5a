"""Manufactured cases, error norms, convergence studies and self-checks."""

from .cases import CASES, DEFAULT_MU, ManufacturedCase, case_2d, case_3d, fd_divergence, make_case
from .norms import error_norms, rates
from .selftest import CheckResult, run_selftest, summarize
from .study import (
    CSV_HEADER,
    DEFAULT_MESH,
    ConvergenceReport,
    LevelResult,
    convergence_study,
    estimate_dofs,
    lambda_sweep,
    run_level,
    run_on_mesh,
)

__all__ = [
    "CASES", "CSV_HEADER", "CheckResult", "ConvergenceReport", "DEFAULT_MESH", "DEFAULT_MU",
    "LevelResult", "ManufacturedCase", "case_2d", "case_3d", "convergence_study",
    "error_norms", "estimate_dofs", "fd_divergence", "lambda_sweep", "make_case", "rates",
    "run_level", "run_on_mesh", "run_selftest", "summarize",
]
