"""Global numbering of the discrete unknowns and the boundary Scott-Zhang
interpolant for Dirichlet data.

Skeleton layout (global): displacement-trace dof ``node * d + comp`` for the
continuous ``P_{k+1}`` Lagrange nodes of E_h*, followed (only when
``k + 1 < d``) by one scalar stress-trace dof per mesh vertex.  Interior
unknowns are numbered per cell and are condensed out before the global solve.

A Lagrange node is identified by its barycentric multi-index on a skeleton
face written against global vertex ids, ``((vid, alpha), ...)`` with zero
entries dropped, so nodes shared by several faces get a single key.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyDirichlet
from .mesh.core import Marker
from .polyquad import (
    _solve_mass,
    face_basis,
    lagrange_multi_indices,
    lagrange_values,
    map_simplex_rule,
    simplex_rule,
)


def n_sym(d):
    return d * (d + 1) // 2


def has_stress_trace(d, k):
    return k + 1 < d


@dataclass
class DofMap:
    dim: int
    k: int
    n_cells: int
    n_sigma_local: int          # symmetric tensors x P_k monomials
    n_u_local: int              # d x P_{k+1} monomials
    node_keys: list
    node_coords: np.ndarray     # (n_nodes, d)
    skel_nodes: np.ndarray      # (n_skel, n_lagrange) global node ids
    n_tr: int                   # stress-trace dofs (0 unless k + 1 < d)
    tr_coupled: np.ndarray      # vertices touched by an interior skeleton face
    dirichlet_nodes: np.ndarray
    cell_nodes: list            # per cell, sorted unique trace nodes
    cell_tr: list               # per cell, sorted stress-trace vertices
    _free: np.ndarray = field(default=None, repr=False)

    @property
    def n_nodes(self):
        return len(self.node_keys)

    @property
    def has_tr(self):
        return self.n_tr > 0

    @property
    def n_trace_u(self):
        return self.n_nodes * self.dim

    @property
    def n_skeleton(self):
        return self.n_trace_u + self.n_tr

    @property
    def n_interior(self):
        return self.n_cells * (self.n_sigma_local + self.n_u_local)

    @property
    def dirichlet_dofs(self):
        d = self.dim
        return (self.dirichlet_nodes[:, None] * d + np.arange(d)).ravel()

    @property
    def free_dofs(self):
        if self._free is None:
            mask = np.ones(self.n_skeleton, dtype=bool)
            mask[self.dirichlet_dofs] = False
            self._free = np.flatnonzero(mask)
        return self._free

    @property
    def pinned_tr_dofs(self):
        """Stress-trace dofs no interior face couples; fixed to zero."""
        if not self.has_tr:
            return np.zeros(0, dtype=np.int64)
        return self.n_trace_u + np.flatnonzero(~self.tr_coupled)

    def sigma_offset(self, c):
        return c * self.n_sigma_local

    def u_offset(self, c):
        return self.n_cells * self.n_sigma_local + c * self.n_u_local

    def cell_skeleton_dofs(self, c):
        """Global skeleton dofs of cell ``c`` in local order ``[tr | u_b]``."""
        d = self.dim
        tr = self.n_trace_u + np.asarray(self.cell_tr[c], dtype=np.int64)
        ub = (np.asarray(self.cell_nodes[c], dtype=np.int64)[:, None] * d + np.arange(d)).ravel()
        return np.concatenate([tr, ub])

    def summary(self):
        return (f"k={self.k} d={self.dim}: interior {self.n_interior}, skeleton {self.n_skeleton} "
                f"(u_b {self.n_trace_u}, sigma_tr {self.n_tr}), "
                f"free {self.free_dofs.size}")


def node_keys_for_face(face_vertices, degree):
    keys = []
    for alpha in lagrange_multi_indices(len(face_vertices), degree):
        keys.append(tuple((int(v), a) for v, a in zip(face_vertices, alpha) if a > 0))
    return keys


def build_dof_map(mesh, k):
    d = mesh.dim
    deg = k + 1
    per_face = [node_keys_for_face(f, deg) for f in mesh.skel_faces]
    all_keys = sorted({key for keys in per_face for key in keys}, key=lambda t: (len(t), t))
    index = {key: i for i, key in enumerate(all_keys)}
    skel_nodes = np.array([[index[key] for key in keys] for keys in per_face], dtype=np.int64)
    coords = np.array([sum(a * mesh.vertices[v] for v, a in key) / deg for key in all_keys])

    dmask = mesh.skel_marker == Marker.DIRICHLET
    dirichlet_nodes = np.unique(skel_nodes[dmask]) if dmask.any() else np.zeros(0, np.int64)

    has_tr = has_stress_trace(d, k)
    n_tr = mesh.n_vertices if has_tr else 0
    interior_skel = mesh.skel_marker == Marker.INTERIOR
    tr_coupled = np.zeros(mesh.n_vertices, dtype=bool)
    tr_coupled[mesh.skel_faces[interior_skel].ravel()] = True

    cell_nodes, cell_tr = [], []
    for c in range(mesh.n_cells):
        s = mesh.cell_skeleton(c)
        cell_nodes.append(np.unique(skel_nodes[s]))
        cell_tr.append(np.unique(mesh.skel_faces[s]) if has_tr else np.zeros(0, np.int64))

    return DofMap(
        dim=d, k=k, n_cells=mesh.n_cells,
        n_sigma_local=n_sym(d) * math.comb(k + d, d),
        n_u_local=d * math.comb(k + 1 + d, d),
        node_keys=all_keys, node_coords=coords, skel_nodes=skel_nodes,
        n_tr=n_tr, tr_coupled=tr_coupled, dirichlet_nodes=dirichlet_nodes,
        cell_nodes=cell_nodes, cell_tr=cell_tr,
    )


def count_skeleton_dofs(mesh, k):
    return build_dof_map(mesh, k).n_skeleton


# ---------------------------------------------------------------------------
# skeleton Lagrange functions


def lagrange_face_mass(mesh, s, degree, order=None):
    """Mass matrix and quadrature of the ``P_degree`` Lagrange basis on skeleton face ``s``."""
    m = mesh.dim - 1
    order = 2 * degree + 2 if order is None else order
    bary, w = simplex_rule(m, order)
    lam = lagrange_values(bary, degree)
    pts, wts = map_simplex_rule(mesh.skel_coords(s), order)
    return np.einsum("q,qa,qb->ab", wts, lam, lam), lam, pts, wts


def lagrange_to_face_basis(mesh, s, degree):
    """Matrix ``(n_face_basis, n_lagrange)`` taking nodal values to face-basis coefficients."""
    order = 2 * degree + 2
    bary, _ = simplex_rule(mesh.dim - 1, order)
    lam = lagrange_values(bary, degree)
    pts, wts = map_simplex_rule(mesh.skel_coords(s), order)
    chi = face_basis(mesh, s, degree)(pts)
    mass = np.einsum("q,qa,qb->ab", wts, chi, chi)
    return _solve_mass(mass, np.einsum("q,qa,qm->am", wts, chi, lam))


@dataclass
class SkeletonFunction:
    """Nodal values ``(n_nodes, m)`` of a continuous skeleton field."""

    values: np.ndarray
    mask: np.ndarray            # nodes where the values are defined

    def on_face(self, dofmap, s):
        return self.values[dofmap.skel_nodes[s]]


def dirichlet_faces(mesh):
    return np.flatnonzero(mesh.skel_marker == Marker.DIRICHLET)


def scott_zhang_boundary(g, mesh, k, dofmap=None, order=None):
    """Boundary Scott-Zhang interpolant of ``g`` into ``P_{k+1}`` on Gamma_D.

    ``g`` maps points ``(..., d)`` to ``(..., m)`` (or ``(...)`` for scalars).
    Each node takes the L2-dual value from the lowest-id Dirichlet face that
    contains it.  Then selected nodes are corrected so the face means, or
    patch means when ``k + 1 < d``, of the interpolant equal those of ``g``,
    which makes the integral over Gamma_D exact.
    """
    dofmap = build_dof_map(mesh, k) if dofmap is None else dofmap
    faces = dirichlet_faces(mesh)
    if faces.size == 0:
        raise EmptyDirichlet("no Dirichlet faces")
    deg = k + 1
    order = 2 * deg + 8 if order is None else order

    mass0, lam, pts, wts = lagrange_face_mass(mesh, faces[0], deg, order)
    lam_int = lam.T @ (wts / wts.sum())                 # int_E N_m / |E|
    gval = np.asarray(g(pts))
    scalar = gval.ndim == 1
    ncomp = 1 if scalar else gval.shape[-1]

    n_nodes = dofmap.n_nodes
    values = np.zeros((n_nodes, ncomp))
    owner = np.full(n_nodes, -1, dtype=np.int64)
    face_mean_g = np.zeros((faces.size, ncomp))
    node_int = np.zeros((faces.size, lam.shape[1]))
    # faces ascend, so the first writer of a node is its lowest-id face
    for i, s in enumerate(faces):
        mass, lam, pts, wts = lagrange_face_mass(mesh, s, deg, order)
        gv = np.asarray(g(pts)).reshape(len(wts), ncomp)
        coef = _solve_mass(mass, lam.T @ (wts[:, None] * gv))
        nodes = dofmap.skel_nodes[s]
        new = owner[nodes] < 0
        values[nodes[new]] = coef[new]
        owner[nodes[new]] = s
        face_mean_g[i] = wts @ gv
        node_int[i] = wts @ lam

    _enforce_means(mesh, dofmap, faces, values, face_mean_g, node_int, lam_int)
    mask = owner >= 0
    out = values[:, 0] if scalar else values
    return SkeletonFunction(out, mask)


def _enforce_means(mesh, dofmap, faces, values, mean_g, node_int, lam_int):
    d, k = mesh.dim, dofmap.k
    nodes_of = dofmap.skel_nodes[faces]                 # (nF, nl)
    deg = k + 1
    if deg >= d:
        # one interior node per face fixes that face's mean
        first_interior = next(j for j, key in enumerate(node_keys_for_face(range(d), deg))
                              if len(key) == d)
        for i in range(faces.size):
            m = nodes_of[i, first_interior]
            err = mean_g[i] - node_int[i] @ values[nodes_of[i]]
            values[m] += err / node_int[i, first_interior]
        return

    # patch correction: candidate nodes carry positive face integrals
    cand_len = min(d - 1, deg)
    star = defaultdict(list)
    for i in range(faces.size):
        for j, m in enumerate(nodes_of[i]):
            if len(dofmap.node_keys[m]) == cand_len:
                star[int(m)].append(i)
    covered = np.full(faces.size, -1, dtype=np.int64)
    chosen = []
    for m in sorted(star):
        if np.all(covered[star[m]] < 0):
            covered[star[m]] = len(chosen)
            chosen.append(m)
    for i in np.flatnonzero(covered < 0):
        m = min(int(n) for n in nodes_of[i] if len(dofmap.node_keys[n]) == cand_len)
        if m not in chosen:
            chosen.append(m)
        covered[i] = chosen.index(m)
    col = {m: j for j, m in enumerate(chosen)}
    weight = np.zeros(len(chosen))               # int over Gamma_D of each chosen basis function
    resid = np.zeros((len(chosen), values.shape[1]))
    for i in range(faces.size):
        resid[covered[i]] += mean_g[i] - node_int[i] @ values[nodes_of[i]]
        for j, m in enumerate(nodes_of[i]):
            if int(m) in col:
                weight[col[int(m)]] += node_int[i, j]
    # a greedy patch is the full star of its node, so its integral is restored exactly;
    # leftover patches leak into neighbours but the total over Gamma_D stays exact
    values[chosen] += resid / weight[:, None]


def interpolate_nodes(g, dofmap, nodes=None):
    """Nodal interpolant (plain evaluation) at the given trace nodes."""
    pts = dofmap.node_coords if nodes is None else dofmap.node_coords[nodes]
    return np.asarray(g(pts))
