"""Structural identities of the discretization, each returning a residual.

Every check compares two independently computed quantities: weak operators
from :mod:`wg_elast.weakcalc` against the integrated-by-parts blocks of
:mod:`wg_elast.assembly`, condensed against monolithic solves, and so on.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse.linalg import spsolve

from ..assembly import (
    ElasticityProblem,
    LameParameters,
    _local_blocks,
    _make_batches,
    assemble_global,
    assemble_monolithic,
    deviatoric,
    recover_interior,
    sym_basis,
    trace,
)
from ..polyquad import (
    cell_basis,
    face_basis,
    n_monomials,
    project_face,
    project_interior,
    quad_cell,
    quad_face,
)
from ..solver import solve
from ..weakcalc import weak_divergence_local, weak_gradient_local
from ..wgspace import build_dof_map, dirichlet_faces, lagrange_face_mass, lagrange_to_face_basis


def random_poly(rng, dim, degree, ncomp=None):
    """Random polynomial in absolute coordinates, vectorised over points."""
    from ..polyquad import monomial_exponents
    exps = monomial_exponents(dim, degree)
    shape = (len(exps),) if ncomp is None else (len(exps), ncomp)
    coef = rng.standard_normal(shape)

    def f(x):
        x = np.asarray(x, dtype=float)
        vals = np.prod(x[..., None, :] ** exps, axis=-1)
        return vals @ coef

    return f


def projection_residual(mesh, cell, j, rng):
    """Idempotence, orthogonality and stability of Q_j on a cell and its first face."""
    d = mesh.dim
    out = 0.0
    p = random_poly(rng, d, j)
    basis = cell_basis(mesh, cell, j)
    rule = quad_cell(mesh, cell, 2 * j + 8)
    coef = project_interior(p, j, mesh, cell)
    out = max(out, np.abs(basis(rule.points) @ coef - p(rule.points)).max()
              / np.abs(p(rule.points)).max())

    def g(x):
        return np.sin(3 * x[..., 0] + 1) * np.exp(x[..., -1])

    coef = project_interior(g, j, mesh, cell)
    v = basis(rule.points)
    r = g(rule.points) - v @ coef
    ip = (v * rule.weights[:, None]).T @ r
    nf = np.sqrt(rule.weights @ g(rule.points) ** 2)
    npb = np.sqrt(np.einsum("q,qa->a", rule.weights, v ** 2))
    out = max(out, np.abs(ip / (nf * npb)).max())
    nq = np.sqrt(rule.weights @ (v @ coef) ** 2)
    if nq > nf * (1 + 1e-12):
        out = max(out, nq / nf - 1)

    s = mesh.cell_skeleton(cell)[0]
    fb = face_basis(mesh, s, j)
    frule = quad_face(mesh, s, 2 * j + 8)
    coef = project_face(g, j, mesh, s)
    v = fb(frule.points)
    r = g(frule.points) - v @ coef
    ip = (v * frule.weights[:, None]).T @ r
    nf = np.sqrt(frule.weights @ g(frule.points) ** 2)
    npb = np.sqrt(np.einsum("q,qa->a", frule.weights, v ** 2))
    out = max(out, np.abs(ip / (nf * npb)).max())
    return float(out)


def commutation_residual(mesh, cell, k, rng):
    """Relative L2 norm of ``div_w{Q_k tau, Q_{k+1}^b tau} - Q_{k+1} div tau``, polynomial ``tau``."""
    d = mesh.dim
    tau = random_poly(rng, d, k + 3, ncomp=d)
    op = weak_divergence_local(mesh, cell, k + 1, interior_degree=k, trace_degree=k + 1)
    vi = project_interior(tau, k, mesh, cell).T.ravel()
    tr = np.concatenate([project_face(tau, k + 1, mesh, s).T.ravel()
                         for s in mesh.cell_skeleton(cell)])
    lhs = op(vi, tr)
    exact, mass = _div_projection(mesh, cell, k + 1, tau)
    err = lhs - exact
    return float(np.sqrt(err @ mass @ err / (exact @ mass @ exact)))


def _div_projection(mesh, cell, r, tau):
    """``Q_r div tau`` via ``(div tau, phi) = <tau n, phi> - (tau, grad phi)``."""
    basis = cell_basis(mesh, cell, r)
    order = 2 * r + 12
    rule = quad_cell(mesh, cell, order)
    phi, dphi = basis(rule.points, grad=True)
    rhs = -np.einsum("q,qpl,ql->p", rule.weights, dphi, tau(rule.points))
    for s, n in zip(mesh.cell_skeleton(cell), mesh.outward_normals(cell)):
        fr = quad_face(mesh, s, order)
        rhs += np.einsum("q,qp,q->p", fr.weights, basis(fr.points), tau(fr.points) @ n)
    mass = np.einsum("q,qa,qb->ab", rule.weights, phi, phi)
    return np.linalg.solve(mass, rhs), mass


def broken_gradient_residual(mesh, cell, k, rng):
    """``(grad_w{v_i, t}, tau) - (grad v_i, tau) - <t - v_i, tau n>`` for random data."""
    d = mesh.dim
    op = weak_gradient_local(mesh, cell, k)
    interior = cell_basis(mesh, cell, k + 1)
    vi = rng.standard_normal(interior.dim)
    skel = mesh.cell_skeleton(cell)
    t = rng.standard_normal((len(skel), n_monomials(d - 1, k + 1)))
    gw = op(vi, t).reshape(d, -1)
    basis = cell_basis(mesh, cell, k)
    order = 2 * (k + 2)
    rule = quad_cell(mesh, cell, order)
    phi = basis(rule.points)
    _, dpsi = interior(rule.points, grad=True)
    c = rng.standard_normal((d, phi.shape[1]))          # tau = sum_l e_l (c_l . phi)
    tau_q = phi @ c.T
    lhs = np.einsum("q,ql,ql->", rule.weights, phi @ gw.T, tau_q)
    rhs = np.einsum("q,qal,a,ql->", rule.weights, dpsi, vi, tau_q)
    for i, (s, n) in enumerate(zip(skel, mesh.outward_normals(cell))):
        fr = quad_face(mesh, s, order)
        jump = face_basis(mesh, s, k + 1)(fr.points) @ t[i] - interior(fr.points) @ vi
        rhs += np.einsum("q,q,q->", fr.weights, jump, basis(fr.points) @ c.T @ n)
    return float(abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0))


def inf_sup_residual(mesh, k, rng, n_samples=5, cells=None):
    """``b(eps_w v, v) - ||eps_w v||^2`` with ``b`` from assembly and ``eps_w`` from weakcalc."""
    d = mesh.dim
    dofmap = build_dof_map(mesh, k)
    problem = ElasticityProblem(LameParameters(1.0, 1.0), k)
    E = sym_basis(d)
    gram = np.einsum("sij,tij->st", E, E)
    worst = 0.0
    for batch in _make_batches(mesh, dofmap, cells):
        blocks = _local_blocks(mesh, dofmap, problem, batch)
        for i, c in enumerate(batch.cells):
            skel = batch.skel[i]
            conv = [lagrange_to_face_basis(mesh, s, k + 1) for s in skel]
            op = weak_gradient_local(mesh, c, k)
            basis = cell_basis(mesh, c, k)
            rule = quad_cell(mesh, c, 2 * k + 4)
            phi = basis(rule.points)
            mass = np.einsum("q,qa,qb->ab", rule.weights, phi, phi)
            nu = n_monomials(d, k + 1)
            for _ in range(n_samples):
                vi = rng.standard_normal((d, nu))
                nodal = rng.standard_normal((dofmap.n_nodes, d))
                vb = nodal[dofmap.skel_nodes[skel]]            # (nf, nl, d)
                traces = np.stack([conv[f] @ vb[f] for f in range(len(skel))])   # (nf, ntr, d)
                grad = np.stack([op(vi[j], traces[:, :, j]) for j in range(d)]).reshape(d, d, -1)
                sym = 0.5 * (grad + grad.transpose(1, 0, 2))
                # coefficients in the symmetric basis: diagonal first, then i < j
                coef = np.stack([sym[a, a] for a in range(d)] +
                                [sym[a, b] for a in range(d) for b in range(a + 1, d)])
                cvec = coef.ravel()
                bval = cvec @ (blocks["B_i"][i] @ vi.ravel() + blocks["B_b"][i] @ vb.ravel())
                norm2 = np.einsum("sp,st,pq,tq->", coef, gram, mass, coef)
                worst = max(worst, abs(bval - norm2) / max(norm2, 1e-300))
    return float(worst)


def algebraic_identity_residual(rng, d, lame, n=100):
    """Pointwise identities linking compliance, deviator and trace (D1-D4)."""
    s = rng.standard_normal((n, d, d))
    t = rng.standard_normal((n, d, d))
    s = s + s.transpose(0, 2, 1)
    t = t + t.transpose(0, 2, 1)
    mu, lam = lame.mu, lame.lam
    ip = lambda a, b: np.einsum("nij,nij->n", a, b)
    r1 = ip(lame.compliance(s), t) - (ip(deviatoric(s), deviatoric(t)) / (2 * mu)
                                      + trace(s) * trace(t) / (d * (d * lam + 2 * mu)))
    r2 = ip(t, t) - (ip(deviatoric(t), deviatoric(t)) + trace(t) ** 2 / d)
    g = rng.standard_normal((n, d, d))
    r3 = trace(g)[:, None, None] * np.eye(d) - d * (g - deviatoric(g))
    r4 = ip(deviatoric(s), t) - ip(s, deviatoric(t))
    scale = 1.0 + np.abs(s).max() * np.abs(t).max() * (1 + 1 / mu)
    return float(max(np.abs(r1).max(), np.abs(r2).max(), np.abs(r3).max(),
                     np.abs(r4).max()) / scale)


def condensation_residual(mesh, problem):
    """Relative gap between condensed+recovered and monolithic solutions."""
    system = assemble_global(mesh, problem)
    x, _ = solve(system.matrix, system.rhs)
    sol = recover_interior(system, x, mesh)
    mono = assemble_monolithic(mesh, problem, system.dofmap)
    K, b = mono.reduced()
    xm = spsolve(K.tocsc(), b)
    full = np.zeros(mono.matrix.shape[0])
    full[mono.free] = xm
    full[mono.fixed] = mono.fixed_values
    ours = np.concatenate([sol.interior_vector(), system.expand(x)])
    return float(np.abs(ours - full).max() / max(np.abs(full).max(), 1e-300)), \
        mono.residual(ours)


def mean_preservation_residual(mesh, k, g, interp, dofmap):
    """``|<I g - g, 1>_{Gamma_D}| / (|Gamma_D| max|g|)``."""
    tot = totg = meas = gmax = 0.0
    for s in dirichlet_faces(mesh):
        _, lam, pts, w = lagrange_face_mass(mesh, s, k + 1, 2 * k + 12)
        vals = np.asarray(interp.values)[dofmap.skel_nodes[s]]
        tot = tot + w @ (lam @ vals)
        gv = np.asarray(g(pts))
        totg = totg + w @ gv
        meas += w.sum()
        gmax = max(gmax, np.abs(gv).max())
    return float(np.abs(np.asarray(tot) - np.asarray(totg)).max() / (meas * max(gmax, 1e-300)))
