"""Element-local discrete weak gradient and weak divergence.

Both operators are dense matrices acting on stacked coefficient vectors
``[interior | trace on face 0 | trace on face 1 | ...]`` where the faces are
the boundary skeleton faces of the cell in ``mesh.cell_skeleton(cell)`` order
and traces are given in :class:`~wg_elast.polyquad.FaceBasis` coefficients.
Outputs are coefficients in the scaled monomial cell basis, component-major:
entry ``l * n + p`` multiplies ``e_l * phi_p``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polyquad import _solve_mass, cell_basis, face_basis, n_monomials, quad_cell, quad_face


@dataclass(frozen=True)
class WeakGradientOperator:
    cell: int
    degree: int            # target degree r
    interior_degree: int
    trace_degree: int
    matrix: np.ndarray     # (d * n_r, n_int + n_faces * n_trace)

    def __call__(self, interior, traces):
        return self.matrix @ np.concatenate([np.ravel(interior), np.ravel(traces)])


@dataclass(frozen=True)
class WeakDivergenceOperator:
    cell: int
    degree: int
    interior_degree: int
    trace_degree: int
    matrix: np.ndarray     # (n_r, d * n_int + n_faces * d * n_trace)

    def __call__(self, interior, traces):
        return self.matrix @ np.concatenate([np.ravel(interior), np.ravel(traces)])


def _face_data(mesh, cell, trace_degree, order):
    skel = mesh.cell_skeleton(cell)
    normals = mesh.outward_normals(cell)
    out = []
    for s, n in zip(skel, normals):
        rule = quad_face(mesh, s, order)
        out.append((rule, face_basis(mesh, s, trace_degree)(rule.points), n))
    return out


def weak_gradient_local(mesh, cell, k, interior_degree=None, trace_degree=None):
    """Weak gradient into ``[P_k(T)]^d`` of a scalar ``{v_i, v_b}``.

    Defaults match the scheme: ``v_i`` in ``P_{k+1}(T)``, ``v_b`` in
    ``P_{k+1}`` on every boundary skeleton face.
    """
    ideg = k + 1 if interior_degree is None else interior_degree
    tdeg = k + 1 if trace_degree is None else trace_degree
    key = ("wgrad", cell, k, ideg, tdeg)
    if key in mesh._cache:
        return mesh._cache[key]
    d = mesh.dim
    order = 2 * (max(k, ideg, tdeg) + 2)
    target = cell_basis(mesh, cell, k)
    interior = cell_basis(mesh, cell, ideg)
    rule = quad_cell(mesh, cell, order)
    phi, dphi = target(rule.points, grad=True)
    psi = interior(rule.points)
    w = rule.weights
    mass = np.einsum("q,qa,qb->ab", w, phi, phi)
    nk = phi.shape[1]
    faces = _face_data(mesh, cell, tdeg, order)
    ntr = n_monomials(d - 1, tdeg)
    rhs = np.zeros((d, nk, psi.shape[1] + len(faces) * ntr))
    # (grad_w v, e_l phi_p) = -(v_i, d_l phi_p) + <v_b, phi_p n_l>
    rhs[:, :, :psi.shape[1]] = -np.einsum("q,qpl,qa->lpa", w, dphi, psi)
    col = psi.shape[1]
    for frule, chi, n in faces:
        phi_f = target(frule.points)
        m = np.einsum("q,qp,qm->pm", frule.weights, phi_f, chi)
        rhs[:, :, col:col + ntr] = n[:, None, None] * m[None]
        col += ntr
    coef = _solve_mass(mass, rhs.transpose(1, 0, 2).reshape(nk, -1))
    matrix = coef.reshape(nk, d, -1).transpose(1, 0, 2).reshape(d * nk, -1)
    op = WeakGradientOperator(cell, k, ideg, tdeg, matrix)
    mesh._cache[key] = op
    return op


def weak_divergence_local(mesh, cell, r, interior_degree=None, trace_degree=None):
    """Weak divergence into ``P_r(T)`` of a vector ``{v_i, v_b}``.

    Defaults: ``v_i`` in ``[P_{r-1}(T)]^d`` and ``v_b`` in ``[P_r]^d`` per face,
    the pairing used by the commutation property with ``r = k + 1``.
    """
    ideg = max(r - 1, 0) if interior_degree is None else interior_degree
    tdeg = r if trace_degree is None else trace_degree
    key = ("wdiv", cell, r, ideg, tdeg)
    if key in mesh._cache:
        return mesh._cache[key]
    d = mesh.dim
    order = 2 * (max(r, ideg, tdeg) + 2)
    target = cell_basis(mesh, cell, r)
    interior = cell_basis(mesh, cell, ideg)
    rule = quad_cell(mesh, cell, order)
    phi, dphi = target(rule.points, grad=True)
    psi = interior(rule.points)
    w = rule.weights
    mass = np.einsum("q,qa,qb->ab", w, phi, phi)
    faces = _face_data(mesh, cell, tdeg, order)
    ntr = n_monomials(d - 1, tdeg)
    nint = psi.shape[1]
    rhs = np.zeros((phi.shape[1], d * nint + len(faces) * d * ntr))
    # (div_w v, phi_q) = -(v_i, grad phi_q) + <v_b . n, phi_q>
    rhs[:, :d * nint] = -np.einsum("q,qpl,qa->pla", w, dphi, psi).reshape(phi.shape[1], -1)
    col = d * nint
    for frule, chi, n in faces:
        m = np.einsum("q,qp,qm->pm", frule.weights, target(frule.points), chi)
        rhs[:, col:col + d * ntr] = (n[None, :, None] * m[:, None, :]).reshape(m.shape[0], -1)
        col += d * ntr
    op = WeakDivergenceOperator(cell, r, ideg, tdeg, _solve_mass(mass, rhs))
    mesh._cache[key] = op
    return op


def weak_gradient_vector(mesh, cell, k, interior, traces):
    """Row-wise weak gradient of a vector field, as a ``(d, d, n_k)`` array.

    ``interior`` is ``(d, n_int)``; ``traces`` is ``(n_faces, d, n_trace)``.
    Entry ``[j, l, p]`` is the ``phi_p`` coefficient of ``d_l v_j``.
    """
    op = weak_gradient_local(mesh, cell, k)
    d = mesh.dim
    rows = [op(interior[j], traces[:, j, :]) for j in range(d)]
    return np.stack(rows).reshape(d, d, -1)
