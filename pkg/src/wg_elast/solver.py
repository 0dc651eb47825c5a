"""Sparse symmetric solves with inertia diagnostics.

The direct path factors with SuperLU using a symmetric ordering and no row
pivoting, which is an LDL^T factorization in disguise: with equal row and
column permutations ``U = D L^T``, so the signs of ``diag(U)`` give the
inertia.  If SuperLU has to pivot, the default partial-pivoting LU is used
and the matrix is reported as not certified definite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from .errors import SingularSystem


@dataclass(frozen=True)
class SparseSymmetric:
    lower: sparse.csr_matrix     # lower triangle incl. diagonal
    n: int

    @classmethod
    def from_matrix(cls, K, rtol=1e-12):
        K = sparse.csr_matrix(K)
        K.sum_duplicates()
        if K.shape[0] != K.shape[1]:
            raise ValueError("matrix must be square")
        asym = abs(K - K.T).max() if K.nnz else 0.0
        scale = abs(K).max() if K.nnz else 1.0
        if asym > rtol * scale:
            raise ValueError(f"matrix not symmetric: max|K-K^T| = {asym:.3e}")
        return cls(sparse.tril(K, format="csr"), K.shape[0])

    def full(self):
        strict = sparse.tril(self.lower, k=-1)
        return (self.lower + strict.T).tocsr()

    def __matmul__(self, x):
        return self.full() @ x


@dataclass
class SolveReport:
    method: str                  # "ldlt", "lu" or "cg"
    iterations: int | None
    residual: float              # ||K x - b|| / ||b||, recomputed from inputs
    definite: bool
    n_positive: int | None = None
    n_negative: int | None = None
    refinement_steps: int = 0
    # ||K x - b|| / (|| |K| |x| || + ||b||); near eps means x is as good as double allows
    backward_error: float | None = None


def relative_residual(K, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(K @ x - b)
    return float(r / nb) if nb > 0 else float(r)


def backward_error(K, x, b):
    r = np.linalg.norm(K @ x - b)
    denom = np.linalg.norm(abs(K) @ np.abs(x)) + np.linalg.norm(b)
    return float(r / denom) if denom > 0 else 0.0


def _ldlt(K):
    lu = spla.splu(K.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                   options={"SymmetricMode": True})
    if not np.array_equal(lu.perm_r, lu.perm_c):
        return lu, None
    piv = lu.U.diagonal()
    return lu, piv


def solve(K, b, method="direct", tol=1e-12, refine_tol=1e-12, max_refine=3):
    """Solve ``K x = b`` for symmetric ``K``.

    ``method`` is ``"direct"`` or ``"cg"``.  CG (Jacobi preconditioned) is
    used only when the direct factorization certifies definiteness;
    otherwise the direct solution is kept.
    """
    if isinstance(K, SparseSymmetric):
        K = K.full()
    K = sparse.csr_matrix(K)
    b = np.asarray(b, dtype=float)
    n = K.shape[0]
    if n == 0:
        return np.zeros(0), SolveReport("ldlt", None, 0.0, True, 0, 0)
    scale = abs(K).max()
    try:
        lu, piv = _ldlt(K)
    except RuntimeError:
        lu, piv = None, None
    n_pos = n_neg = None
    definite = False
    method_used = "ldlt"
    if piv is not None:
        tiny = 1e-14 * scale
        bad = np.flatnonzero(np.abs(piv) <= tiny)
        if bad.size:
            lu = None
        else:
            n_pos = int((piv > 0).sum())
            n_neg = int((piv < 0).sum())
            definite = n_neg == 0
    if lu is None or piv is None:
        method_used = "lu"
        try:
            lu = spla.splu(K.tocsc())
        except RuntimeError as exc:
            diag = np.abs(K.diagonal())
            raise SingularSystem(f"factorization failed: {exc}", int(np.argmin(diag))) from exc
    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        raise SingularSystem("non-finite solution", int(np.flatnonzero(~np.isfinite(x))[0]))
    steps = 0
    res = relative_residual(K, x, b)
    while res > refine_tol and steps < max_refine:
        x = x + lu.solve(b - K @ x)
        steps += 1
        res = relative_residual(K, x, b)

    if method == "cg" and definite:
        dinv = 1.0 / K.diagonal()
        M = spla.LinearOperator(K.shape, matvec=lambda v: dinv * v)
        count = [0]

        def cb(_):
            count[0] += 1

        xc, info = spla.cg(K, b, rtol=tol, maxiter=10 * n, M=M, callback=cb)
        if info == 0:
            return xc, SolveReport("cg", count[0], relative_residual(K, xc, b), True,
                                   n_pos, n_neg, 0, backward_error(K, xc, b))
    return x, SolveReport(method_used, None, res, definite, n_pos, n_neg, steps,
                          backward_error(K, x, b))


def solve_system(system, method="direct"):
    """Solve a :class:`~wg_elast.assembly.CondensedSystem`."""
    return solve(system.matrix, system.rhs, method=method)
