"""Local forms, static condensation and global assembly.

Local unknown order inside a cell is ``[sigma_i | u_i | sigma_tr | u_b]``.
The first two blocks are interior and are eliminated cell by cell; the last
two are the skeleton unknowns in the cell's ``DofMap.cell_skeleton_dofs``
order.  The local matrix before any sign change is::

    [ A + Z_ii   -B_i    Z_it    -B_b  ]      [  0   ]
    [ -B_i^T    -S_ii     0      -S_ib ]      [ F_i  ]
    [ Z_it^T      0      Z_tt     0    ]  ,   [  0   ]
    [ -B_b^T   -S_ib^T    0     -S_bb  ]      [ -G_N ]

The assembled skeleton system is negated after Dirichlet elimination so the
displacement block is positive definite.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse

from .errors import SingularInterior
from .mesh.core import Marker, face_normals
from .polyquad import lagrange_values, map_simplex_rule, monomials, simplex_rule
from .wgspace import build_dof_map, scott_zhang_boundary

CHUNK_ENTRIES = 3_000_000     # cap on floats held by one batch of dense local matrices


@dataclass(frozen=True)
class LameParameters:
    mu: float
    lam: float

    def __post_init__(self):
        if not (self.mu > 0 and self.lam > 0):
            raise ValueError("Lame parameters must be positive")

    def compliance(self, sigma):
        """``A sigma`` for tensors ``(..., d, d)``."""
        d = sigma.shape[-1]
        tr = np.trace(sigma, axis1=-2, axis2=-1)[..., None, None]
        coef = self.lam / (2 * self.mu + d * self.lam)
        return (sigma - coef * tr * np.eye(d)) / (2 * self.mu)

    def stress(self, strain):
        d = strain.shape[-1]
        tr = np.trace(strain, axis1=-2, axis2=-1)[..., None, None]
        return 2 * self.mu * strain + self.lam * tr * np.eye(d)

    def compliance_matrix(self, d):
        """``(A E_s : E_t)`` over the symmetric tensor basis."""
        e = sym_basis(d)
        return np.einsum("sij,tij->st", self.compliance(e), e)


def sym_basis(d):
    """Symmetric canonical tensors: diagonal units, then ``e_i e_j^T + e_j e_i^T``."""
    out = []
    for i in range(d):
        t = np.zeros((d, d))
        t[i, i] = 1.0
        out.append(t)
    for i in range(d):
        for j in range(i + 1, d):
            t = np.zeros((d, d))
            t[i, j] = t[j, i] = 1.0
            out.append(t)
    return np.asarray(out)


def trace(t):
    return np.trace(t, axis1=-2, axis2=-1)


def deviatoric(t):
    d = t.shape[-1]
    return t - trace(t)[..., None, None] / d * np.eye(d)


@dataclass
class ElasticityProblem:
    """Body force ``f`` (with ``div sigma = f``) and boundary data.

    ``f`` and ``g_D`` map points ``(..., d)`` to ``(..., d)``; ``g_N`` maps
    points and unit outward normals to tractions ``sigma n``.  Missing data
    is zero.
    """

    lame: LameParameters
    k: int
    f: Callable | None = None
    g_D: Callable | None = None
    g_N: Callable | None = None

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")


# ---------------------------------------------------------------------------
# batched local blocks


@dataclass
class _Batch:
    cells: np.ndarray           # (C,)
    skel: np.ndarray            # (C, nf) skeleton faces
    to_unique: np.ndarray       # (C, n_dup) dup skeleton slot -> local unique slot
    dofs: np.ndarray            # (C, nS) global skeleton dofs


def _group_cells(mesh, dofmap):
    """Batches of cells sharing all local block sizes."""
    groups = defaultdict(list)
    nsub = np.diff(mesh.sub_ptr)
    nskel = np.diff(mesh.cskel_ptr)
    for c in range(mesh.n_cells):
        key = (int(nsub[c]), int(nskel[c]), len(dofmap.cell_nodes[c]), len(dofmap.cell_tr[c]))
        groups[key].append(c)
    return groups


def _make_batches(mesh, dofmap, cells=None):
    d = mesh.dim
    nl = dofmap.skel_nodes.shape[1]
    nI = dofmap.n_sigma_local + dofmap.n_u_local
    if cells is None:
        groups = _group_cells(mesh, dofmap)
    else:
        wanted = set(int(c) for c in cells)
        groups = defaultdict(list)
        for key, members in _group_cells(mesh, dofmap).items():
            sel = [c for c in members if c in wanted]
            if sel:
                groups[key] = sel
    batches = []
    for (_, nf, nnod, ntr), members in sorted(groups.items()):
        n_dup = (nf * d if ntr else 0) + nf * nl * d
        per_cell = (nI + n_dup) ** 2 + n_dup * (ntr + nnod * d)
        size = max(1, CHUNK_ENTRIES // per_cell)
        for start in range(0, len(members), size):
            cs = np.asarray(members[start:start + size], dtype=np.int64)
            skel = np.stack([mesh.cell_skeleton(c) for c in cs])
            to_unique = np.empty((len(cs), n_dup), dtype=np.int64)
            dofs = np.stack([dofmap.cell_skeleton_dofs(c) for c in cs])
            for i, c in enumerate(cs):
                parts = []
                if ntr:
                    parts.append(np.searchsorted(dofmap.cell_tr[c], mesh.skel_faces[skel[i]]).ravel())
                node = np.searchsorted(dofmap.cell_nodes[c], dofmap.skel_nodes[skel[i]])
                parts.append((ntr + node[..., None] * d + np.arange(d)).ravel())
                to_unique[i] = np.concatenate(parts)
            batches.append(_Batch(cs, skel, to_unique, dofs))
    return batches


def _local_blocks(mesh, dofmap, problem, batch, order=None, load_order=None):
    """All local blocks of a batch, skeleton columns in unique local layout."""
    d, k = mesh.dim, dofmap.k
    lame = problem.lame
    mu = lame.mu
    C = len(batch.cells)
    nk = math.comb(k + d, d)
    nu = math.comb(k + 1 + d, d)
    ns = d * (d + 1) // 2
    has_tr = dofmap.has_tr
    order = 2 * (k + 2) if order is None else order
    load_order = 2 * (k + 2) + 4 if load_order is None else load_order
    E = sym_basis(d)
    trE = trace(E)

    cells = batch.cells
    center = mesh.centroid[cells]
    h = mesh.h_cell[cells]
    sub = np.stack([mesh.cell_simplices(c) for c in cells])            # (C, nsub, d+1, d)
    pts, wts = map_simplex_rule(sub, order)
    pts = pts.reshape(C, -1, d)
    wts = wts.reshape(C, -1)
    psi, dpsi = monomials(pts, center[:, None, :], h[:, None], k + 1, grad=True)
    phi, dphi = psi[..., :nk], dpsi[..., :nk, :]

    mass_k = np.einsum("cq,cqa,cqb->cab", wts, phi, phi)
    A = np.einsum("st,cpq->csptq", lame.compliance_matrix(d), mass_k)
    A = A.reshape(C, ns * nk, ns * nk)
    gp = np.einsum("cq,cqpl,cqa->cpla", wts, dphi, psi)
    B_i = -np.einsum("sjl,cpla->cspja", E, gp).reshape(C, ns * nk, d * nu)

    # faces
    skel = batch.skel
    nf = skel.shape[1]
    fcoords = mesh.vertices[mesh.skel_faces[skel]]                   # (C, nf, d, d)
    normals = face_normals(fcoords, mesh.center[cells][:, None, :])
    fpts, fw = map_simplex_rule(fcoords, order)
    bary = simplex_rule(d - 1, order)[0]
    lam_k = lagrange_values(bary, k + 1)                             # (fq, nl)
    nl = lam_k.shape[1]
    psi_f = monomials(fpts, center[:, None, None, :], h[:, None, None], k + 1)
    phi_f = psi_f[..., :nk]
    h_e = mesh.skel_h[skel]
    alpha = 2 * mu / h_e

    pm = np.einsum("cfq,cfqp,qm->cfpm", fw, phi_f, lam_k)
    en = np.einsum("sjl,cfl->cfsj", E, normals)
    B_b = np.einsum("cfsj,cfpm->cspfmj", en, pm).reshape(C, ns * nk, nf * nl * d)

    eye_d = np.eye(d)
    s_psi = np.einsum("cf,cfq,cfqa,cfqb->cab", alpha, fw, psi_f, psi_f)
    S_ii = np.einsum("jk,cab->cjakb", eye_d, s_psi).reshape(C, d * nu, d * nu)
    s_psin = np.einsum("cf,cfq,cfqa,qm->cafm", alpha, fw, psi_f, lam_k)
    S_ib = -np.einsum("jk,cafm->cjafmk", eye_d, s_psin).reshape(C, d * nu, nf * nl * d)
    s_nn = np.einsum("cf,cfq,qm,qn->cfmn", alpha, fw, lam_k, lam_k)
    S_bb = np.einsum("fg,cfmn,jk->cfmjgnk", np.eye(nf), s_nn, eye_d).reshape(
        C, nf * nl * d, nf * nl * d)

    nsig = ns * nk
    if has_tr:
        beta = h_e / (2 * mu) * (mesh.skel_marker[skel] == Marker.INTERIOR)
        lam1 = lagrange_values(bary, 1)                              # (fq, d)
        z_pp = np.einsum("cf,cfq,cfqp,cfqr->cpr", beta, fw, phi_f, phi_f)
        Z_ii = np.einsum("s,t,cpr->csptr", trE, trE, z_pp).reshape(C, nsig, nsig)
        z_pv = np.einsum("cf,cfq,cfqp,qv->cpfv", beta, fw, phi_f, lam1)
        Z_it = -np.einsum("s,cpfv->cspfv", trE, z_pv).reshape(C, nsig, nf * d)
        z_vv = np.einsum("cf,cfq,qv,qw->cfvw", beta, fw, lam1, lam1)
        Z_tt = np.einsum("fg,cfvw->cfvgw", np.eye(nf), z_vv).reshape(C, nf * d, nf * d)
    else:
        Z_ii = np.zeros_like(A)
        Z_it = np.zeros((C, nsig, 0))
        Z_tt = np.zeros((C, 0, 0))

    # loads
    F_i = np.zeros((C, d * nu))
    if problem.f is not None:
        lp, lw = map_simplex_rule(sub, load_order)
        lp = lp.reshape(C, -1, d)
        lw = lw.reshape(C, -1)
        lpsi = monomials(lp, center[:, None, :], h[:, None], k + 1)
        F_i = np.einsum("cq,cqj,cqa->cja", lw, problem.f(lp), lpsi).reshape(C, d * nu)
    G_N = np.zeros((C, nf * nl * d))
    neumann = mesh.skel_marker[skel] == Marker.NEUMANN
    if problem.g_N is not None and neumann.any():
        np_, nw = map_simplex_rule(fcoords, load_order)
        lam_l = lagrange_values(simplex_rule(d - 1, load_order)[0], k + 1)
        nrm = np.broadcast_to(normals[:, :, None, :], np_.shape)
        gn = problem.g_N(np_, nrm) * neumann[:, :, None, None]
        G_N = np.einsum("cfq,cfqj,qm->cfmj", nw, gn, lam_l).reshape(C, -1)

    return dict(A=A, Z_ii=Z_ii, Z_it=Z_it, Z_tt=Z_tt, B_i=B_i, B_b=B_b, S_ii=S_ii, S_ib=S_ib,
                S_bb=S_bb, F_i=F_i, G_N=G_N)


def _collapse(M, to_unique, n, axes):
    """Sum duplicated skeleton slots of ``M`` (C, ...) into ``n`` unique ones.

    ``axes`` lists the trailing axes indexed by duplicated slots (1 or 2 axes).
    """
    C = M.shape[0]
    if axes == 1:
        r = M.shape[1] if M.ndim == 3 else 1
        M3 = M.reshape(C, r, -1)
        idx = (np.arange(C)[:, None, None] * r + np.arange(r)[None, :, None]) * n \
            + to_unique[:, None, :]
        out = np.bincount(idx.ravel(), weights=M3.ravel(), minlength=C * r * n)
        return out.reshape(M.shape[:-1] + (n,))
    idx = (np.arange(C)[:, None, None] * n + to_unique[:, :, None]) * n + to_unique[:, None, :]
    return np.bincount(idx.ravel(), weights=M.ravel(), minlength=C * n * n).reshape(C, n, n)


def _full_local(blocks, batch, n_skel_local):
    """Interior/skeleton blocks of the local matrix with unique skeleton columns."""
    A, B_i = blocks["A"], blocks["B_i"]
    C, nsig, nui = A.shape[0], A.shape[1], B_i.shape[2]
    K_II = np.empty((C, nsig + nui, nsig + nui))
    K_II[:, :nsig, :nsig] = A + blocks["Z_ii"]
    K_II[:, :nsig, nsig:] = -B_i
    K_II[:, nsig:, :nsig] = -B_i.transpose(0, 2, 1)
    K_II[:, nsig:, nsig:] = -blocks["S_ii"]
    ntd = blocks["Z_it"].shape[2]
    nud = blocks["B_b"].shape[2]
    K_ISd = np.zeros((C, nsig + nui, ntd + nud))
    K_ISd[:, :nsig, :ntd] = blocks["Z_it"]
    K_ISd[:, :nsig, ntd:] = -blocks["B_b"]
    K_ISd[:, nsig:, ntd:] = -blocks["S_ib"]
    K_SSd = np.zeros((C, ntd + nud, ntd + nud))
    K_SSd[:, :ntd, :ntd] = blocks["Z_tt"]
    K_SSd[:, ntd:, ntd:] = -blocks["S_bb"]
    F_Sd = np.concatenate([np.zeros((C, ntd)), -blocks["G_N"]], axis=1)
    tu = batch.to_unique
    K_IS = _collapse(K_ISd, tu, n_skel_local, 1)
    K_SS = _collapse(K_SSd, tu, n_skel_local, 2)
    F_S = _collapse(F_Sd, tu, n_skel_local, 1)
    F_I = np.concatenate([np.zeros((C, nsig)), blocks["F_i"]], axis=1)
    return K_II, K_IS, K_SS, F_I, F_S


def _interior_solve(K_II, rhs, nsig, cells):
    """Solve ``K_II x = rhs`` by block elimination: P = A + Z_ii, Q = S_ii + B^T P^-1 B."""
    P = K_II[:, :nsig, :nsig]
    mB = K_II[:, :nsig, nsig:]                   # -B_i
    mS = K_II[:, nsig:, nsig:]                   # -S_ii
    _check_spd(P, cells)
    r1, r2 = rhs[:, :nsig], rhs[:, nsig:]
    PinvB = np.linalg.solve(P, mB)
    Pinvr1 = np.linalg.solve(P, r1)
    Q = -mS + np.einsum("cij,cik->cjk", mB, PinvB)
    _check_spd(Q, cells)
    # P x - B y = r1 ; -B^T x - S y = r2  =>  Q y = -(r2 + B^T P^-1 r1)
    y = -np.linalg.solve(Q, r2 - np.einsum("cij,cik->cjk", mB, Pinvr1))
    x = Pinvr1 - np.einsum("cij,cjk->cik", PinvB, y)
    return np.concatenate([x, y], axis=1)


def _check_spd(M, cells):
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        for i, c in enumerate(cells):
            try:
                np.linalg.cholesky(M[i])
            except np.linalg.LinAlgError:
                raise SingularInterior(int(c)) from None
        raise


def _condense_batch(K_II, K_IS, K_SS, F_I, F_S, nsig, cells):
    rhs = np.concatenate([K_IS, F_I[:, :, None]], axis=2)
    sol = _interior_solve(K_II, rhs, nsig, cells)
    # The compliance block has a ~1/lambda eigenvalue, so the local solve loses
    # ~log10(lambda) digits.  One refinement step with an extended-precision
    # residual recovers them; the Schur complement is formed before rounding so
    # it stays consistent with X, g and symmetric to roundoff.
    ld = np.longdouble
    K_IS_l = K_IS.astype(ld)
    sol_l = sol.astype(ld)
    res = rhs.astype(ld) - np.einsum("cij,cjk->cik", K_II.astype(ld), sol_l)
    sol_l += _interior_solve(K_II, res.astype(float), nsig, cells)
    schur = (K_SS - np.einsum("cis,cit->cst", K_IS_l, sol_l[:, :, :-1])).astype(float)
    red = (F_S - np.einsum("cis,ci->cs", K_IS_l, sol_l[:, :, -1])).astype(float)
    schur = 0.5 * (schur + schur.transpose(0, 2, 1))
    sol = sol_l.astype(float)
    return schur, red, sol[:, :, :-1], sol[:, :, -1]


# ---------------------------------------------------------------------------
# single-cell interface


@dataclass
class LocalElementSystem:
    cell: int
    blocks: dict                 # A, Z_*, B_*, S_*, F_i, G_N (skeleton columns per sub-face)
    K_II: np.ndarray
    K_IS: np.ndarray
    K_SS: np.ndarray
    F_I: np.ndarray
    F_S: np.ndarray
    skeleton_dofs: np.ndarray
    n_sigma: int

    @property
    def matrix(self):
        return np.block([[self.K_II, self.K_IS], [self.K_IS.T, self.K_SS]])

    @property
    def rhs(self):
        return np.concatenate([self.F_I, self.F_S])


@dataclass
class SchurContribution:
    cell: int
    matrix: np.ndarray
    rhs: np.ndarray
    X: np.ndarray                # K_II^-1 K_IS
    g: np.ndarray                # K_II^-1 F_I
    skeleton_dofs: np.ndarray


def local_forms(mesh, cell, problem, dofmap=None):
    dofmap = build_dof_map(mesh, problem.k) if dofmap is None else dofmap
    batch = _make_batches(mesh, dofmap, cells=[cell])[0]
    blocks = _local_blocks(mesh, dofmap, problem, batch)
    K_II, K_IS, K_SS, F_I, F_S = _full_local(blocks, batch, batch.dofs.shape[1])
    return LocalElementSystem(cell, {k: v[0] for k, v in blocks.items()}, K_II[0], K_IS[0],
                              K_SS[0], F_I[0], F_S[0], batch.dofs[0], dofmap.n_sigma_local)


def condense(local: LocalElementSystem) -> SchurContribution:
    schur, red, X, g = _condense_batch(local.K_II[None], local.K_IS[None], local.K_SS[None],
                                       local.F_I[None], local.F_S[None], local.n_sigma,
                                       [local.cell])
    return SchurContribution(local.cell, schur[0], red[0], X[0], g[0], local.skeleton_dofs)


# ---------------------------------------------------------------------------
# global system


@dataclass
class CondensedSystem:
    matrix: sparse.csr_matrix            # over free skeleton dofs, sign-normalised
    rhs: np.ndarray
    free: np.ndarray
    dirichlet: np.ndarray
    dirichlet_values: np.ndarray
    pinned: np.ndarray
    lift: np.ndarray                     # G_fD x_D moved to the right-hand side
    dofmap: object
    problem: ElasticityProblem
    recovery: list = field(repr=False, default_factory=list)

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def expect_definite(self):
        return not self.dofmap.has_tr

    def expand(self, x_free):
        x = np.zeros(self.dofmap.n_skeleton)
        x[self.free] = x_free
        x[self.dirichlet] = self.dirichlet_values
        return x


def dirichlet_values(mesh, dofmap, problem):
    d = mesh.dim
    nodes = dofmap.dirichlet_nodes
    if problem.g_D is None or nodes.size == 0:
        return np.zeros(nodes.size * d)
    interp = scott_zhang_boundary(problem.g_D, mesh, dofmap.k, dofmap)
    return np.asarray(interp.values)[nodes].reshape(-1)


def _eliminate(G, r, dofmap, x_D):
    free = dofmap.free_dofs
    dirichlet = dofmap.dirichlet_dofs
    G = G.tocsr()
    G_ff = G[free][:, free]
    lift = G[free][:, dirichlet] @ x_D if dirichlet.size else np.zeros(free.size)
    pinned = dofmap.pinned_tr_dofs
    if pinned.size:
        # uncoupled stress-trace nodes: keep them in the system, fixed at zero
        pos = np.searchsorted(free, pinned)
        tr_free = np.flatnonzero(free >= dofmap.n_trace_u)
        diag = np.abs(G_ff.diagonal()[tr_free])
        scale = diag[diag > 0].mean() if np.any(diag > 0) else 1.0
        G_ff = (G_ff + sparse.csr_matrix((np.full(pos.size, scale), (pos, pos)),
                                         shape=G_ff.shape)).tocsr()
    K = (-G_ff).tocsr()
    K.sort_indices()
    b = -(r[free] - lift)
    return K, b, free, dirichlet, lift, pinned


def assemble_global(mesh, problem, dofmap=None):
    """Condensed, Dirichlet-eliminated skeleton system."""
    dofmap = build_dof_map(mesh, problem.k) if dofmap is None else dofmap
    n = dofmap.n_skeleton
    G = sparse.csr_matrix((n, n))
    r = np.zeros(n)
    recovery = []
    for batch in _make_batches(mesh, dofmap):
        blocks = _local_blocks(mesh, dofmap, problem, batch)
        K_II, K_IS, K_SS, F_I, F_S = _full_local(blocks, batch, batch.dofs.shape[1])
        schur, red, X, g = _condense_batch(K_II, K_IS, K_SS, F_I, F_S,
                                           dofmap.n_sigma_local, batch.cells)
        dofs = batch.dofs
        nS = dofs.shape[1]
        rows = np.broadcast_to(dofs[:, :, None], (len(dofs), nS, nS)).ravel()
        cols = np.broadcast_to(dofs[:, None, :], (len(dofs), nS, nS)).ravel()
        G = G + sparse.csr_matrix((schur.ravel(), (rows, cols)), shape=(n, n))
        np.add.at(r, dofs.ravel(), red.ravel())
        recovery.append((batch.cells, dofs, X, g))
    x_D = dirichlet_values(mesh, dofmap, problem)
    K, b, free, dirichlet, lift, pinned = _eliminate(G, r, dofmap, x_D)
    return CondensedSystem(K, b, free, dirichlet, x_D, pinned, lift, dofmap, problem, recovery)


@dataclass
class WgSolution:
    mesh: object
    dofmap: object
    k: int
    sigma: np.ndarray            # (n_cells, n_sym, n_k) coefficients
    u: np.ndarray                # (n_cells, d, n_{k+1}) coefficients
    u_b: np.ndarray              # (n_nodes, d) trace nodal values
    sigma_tr: np.ndarray | None  # (n_vertices,) when k + 1 < d

    def stress_at(self, cell, x):
        """Stress tensors ``(..., d, d)`` at points in ``cell``."""
        m = self.mesh
        phi = monomials(x, m.centroid[cell], m.h_cell[cell], self.k)
        return np.einsum("sp,...p,sij->...ij", self.sigma[cell], phi, sym_basis(m.dim))

    def displacement_at(self, cell, x):
        m = self.mesh
        psi = monomials(x, m.centroid[cell], m.h_cell[cell], self.k + 1)
        return np.einsum("ja,...a->...j", self.u[cell], psi)

    def interior_vector(self):
        n = self.sigma.shape[0]
        return np.concatenate([self.sigma.reshape(n, -1).ravel(), self.u.reshape(n, -1).ravel()])


def recover_interior(system: CondensedSystem, x_free, mesh):
    dofmap = system.dofmap
    d, k = mesh.dim, dofmap.k
    x = system.expand(x_free)
    nsig, nu = dofmap.n_sigma_local, dofmap.n_u_local
    sigma = np.zeros((mesh.n_cells, nsig))
    u = np.zeros((mesh.n_cells, nu))
    for cells, dofs, X, g in system.recovery:
        xI = g - np.einsum("cis,cs->ci", X, x[dofs])
        sigma[cells] = xI[:, :nsig]
        u[cells] = xI[:, nsig:]
    ns = d * (d + 1) // 2
    u_b = x[:dofmap.n_trace_u].reshape(-1, d)
    tr = x[dofmap.n_trace_u:] if dofmap.has_tr else None
    return WgSolution(mesh, dofmap, k, sigma.reshape(mesh.n_cells, ns, -1),
                      u.reshape(mesh.n_cells, d, -1), u_b, tr)


# ---------------------------------------------------------------------------
# monolithic oracle


@dataclass
class MonolithicSystem:
    matrix: sparse.csr_matrix        # full system over all dofs (unnegated)
    rhs: np.ndarray
    free: np.ndarray                 # free dofs (interior + free skeleton), global numbering
    fixed: np.ndarray
    fixed_values: np.ndarray
    pinned: np.ndarray
    n_interior: int

    def reduced(self):
        """Dirichlet-eliminated matrix and right-hand side."""
        K = self.matrix.tocsr()
        Kff = K[self.free][:, self.free]
        b = self.rhs[self.free] - K[self.free][:, self.fixed] @ self.fixed_values
        if self.pinned.size:
            pos = np.searchsorted(self.free, self.pinned)
            Kff = Kff + sparse.csr_matrix((np.ones(pos.size), (pos, pos)), shape=Kff.shape)
        return Kff.tocsr(), b

    def residual(self, x_full):
        """Relative residual of the uncondensed equations at ``x_full``."""
        K, b = self.reduced()
        r = K @ x_full[self.free] - b
        return float(np.linalg.norm(r) / max(np.linalg.norm(b), np.finfo(float).tiny))


def assemble_monolithic(mesh, problem, dofmap=None):
    """Uncondensed system over ``[interior | skeleton]`` unknowns (oracle)."""
    dofmap = build_dof_map(mesh, problem.k) if dofmap is None else dofmap
    nint = dofmap.n_interior
    n = nint + dofmap.n_skeleton
    rows, cols, vals = [], [], []
    rhs = np.zeros(n)
    nsig, nu = dofmap.n_sigma_local, dofmap.n_u_local
    for batch in _make_batches(mesh, dofmap):
        blocks = _local_blocks(mesh, dofmap, problem, batch)
        K_II, K_IS, K_SS, F_I, F_S = _full_local(blocks, batch, batch.dofs.shape[1])
        Kloc = np.concatenate([np.concatenate([K_II, K_IS], 2),
                               np.concatenate([K_IS.transpose(0, 2, 1), K_SS], 2)], 1)
        idx = np.concatenate([
            np.array([np.r_[dofmap.sigma_offset(c) + np.arange(nsig),
                            dofmap.u_offset(c) + np.arange(nu)] for c in batch.cells]),
            nint + batch.dofs], axis=1)
        m = idx.shape[1]
        rows.append(np.broadcast_to(idx[:, :, None], (len(idx), m, m)).ravel())
        cols.append(np.broadcast_to(idx[:, None, :], (len(idx), m, m)).ravel())
        vals.append(Kloc.ravel())
        np.add.at(rhs, idx.ravel(), np.concatenate([F_I, F_S], 1).ravel())
    K = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n))
    fixed = nint + dofmap.dirichlet_dofs
    free = np.setdiff1d(np.arange(n), fixed)
    x_D = dirichlet_values(mesh, dofmap, problem)
    return MonolithicSystem(K, rhs, free, fixed, x_D, nint + dofmap.pinned_tr_dofs, nint)
