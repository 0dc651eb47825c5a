"""Relative L2 errors of the interior fields against a manufactured case."""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from ..assembly import sym_basis
from ..polyquad import map_simplex_rule, monomials


def error_norms(solution, case, order=None):
    """``(err_u, err_sigma, err_gradu)``, each relative to the exact field's norm.

    ``err_gradu`` is the broken H1 seminorm of ``u - u_hi`` over ``||grad u||``.
    """
    mesh = solution.mesh
    k = solution.k
    d = mesh.dim
    order = 2 * (k + 2) + 4 if order is None else order
    E = sym_basis(d)
    nk = solution.sigma.shape[2]
    acc = np.zeros(6)       # |e_u|^2, |u|^2, |e_s|^2, |s|^2, |e_g|^2, |g|^2
    groups = defaultdict(list)
    for c, n in enumerate(np.diff(mesh.sub_ptr)):
        groups[int(n)].append(c)
    for _, cells in sorted(groups.items()):
        for start in range(0, len(cells), 4096):
            cs = np.asarray(cells[start:start + 4096])
            sub = np.stack([mesh.cell_simplices(c) for c in cs])
            pts, wts = map_simplex_rule(sub, order)
            pts = pts.reshape(len(cs), -1, d)
            wts = wts.reshape(len(cs), -1)
            psi, dpsi = monomials(pts, mesh.centroid[cs][:, None, :], mesh.h_cell[cs][:, None],
                                  k + 1, grad=True)
            uh = np.einsum("cja,cqa->cqj", solution.u[cs], psi)
            guh = np.einsum("cja,cqal->cqjl", solution.u[cs], dpsi)
            sh = np.einsum("csp,cqp,sij->cqij", solution.sigma[cs], psi[..., :nk], E)
            u = case.u(pts)
            s = case.sigma(pts)
            g = case.grad_u(pts)
            acc += [
                np.einsum("cq,cqj->", wts, (u - uh) ** 2),
                np.einsum("cq,cqj->", wts, u ** 2),
                np.einsum("cq,cqij->", wts, (s - sh) ** 2),
                np.einsum("cq,cqij->", wts, s ** 2),
                np.einsum("cq,cqij->", wts, (g - guh) ** 2),
                np.einsum("cq,cqij->", wts, g ** 2),
            ]
    acc = np.sqrt(acc)
    return float(acc[0] / acc[1]), float(acc[2] / acc[3]), float(acc[4] / acc[5])


def rates(errors):
    """``log2(e_{i-1} / e_i)`` for successive halvings; first entry is ``None``."""
    out = [None]
    for a, b in zip(errors[:-1], errors[1:]):
        out.append(float(np.log2(a / b)) if a > 0 and b > 0 else None)
    return out
