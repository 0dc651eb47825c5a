"""Shape-regularity diagnostics (star-shapedness and vertex separation)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import _halfspaces, cell_loops


@dataclass
class RegularityReport:
    theta: np.ndarray        # per-cell star-ball radius around M_T over h_T
    ell: np.ndarray          # per-cell min vertex distance over h_T
    theta_threshold: float
    ell_threshold: float

    @property
    def theta_min(self):
        return float(self.theta.min())

    @property
    def ell_min(self):
        return float(self.ell.min())

    @property
    def flagged_cells(self):
        return np.flatnonzero((self.theta < self.theta_threshold) | (self.ell < self.ell_threshold))

    @property
    def ok(self):
        return self.flagged_cells.size == 0

    def summary(self):
        lines = [
            f"cells            {self.theta.size}",
            f"theta* estimate  {self.theta_min:.6g}",
            f"l* estimate      {self.ell_min:.6g}",
        ]
        if not self.ok:
            lines.append(f"flagged cells    {self.flagged_cells.size} "
                         f"(theta < {self.theta_threshold} or l < {self.ell_threshold})")
        return "\n".join(lines)


def check_regularity(mesh, theta_threshold=0.05, ell_threshold=0.05):
    """Estimate the M1/M2 constants cell by cell.

    The star-ball radius is the distance from M_T to the nearest supporting
    hyperplane of the boundary skeleton faces; it is negative if M_T is on
    the wrong side of some face.
    """
    theta = np.empty(mesh.n_cells)
    ell = np.empty(mesh.n_cells)
    for c in range(mesh.n_cells):
        a, b = _halfspaces(mesh.vertices, cell_loops(mesh, c), mesh.dim)
        theta[c] = (b - a @ mesh.center[c]).min() / mesh.h_cell[c]
        p = mesh.vertices[list(mesh.cells[c])]
        diff = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=-1)
        diff[np.diag_indices_from(diff)] = np.inf
        ell[c] = diff.min() / mesh.h_cell[c]
    return RegularityReport(theta, ell, theta_threshold, ell_threshold)


def proper_face_violations(mesh, rtol=1e-10):
    """Faces whose relative interior contains a mesh node (should be empty)."""
    bad = []
    verts = mesh.vertices
    for f, fv in enumerate(mesh.faces):
        p = verts[list(fv)]
        tol = rtol * mesh.h_face[f]
        lo, hi = p.min(axis=0) - tol, p.max(axis=0) + tol
        cand = np.flatnonzero(np.all((verts >= lo) & (verts <= hi), axis=1))
        cand = np.setdiff1d(cand, fv)
        if cand.size == 0:
            continue
        if mesh.dim == 2:
            t = p[1] - p[0]
            n = np.array([t[1], -t[0]]) / np.linalg.norm(t)
            off = np.abs((verts[cand] - p[0]) @ n)
        else:
            n = np.cross(p[1] - p[0], p[2] - p[0])
            n /= np.linalg.norm(n)
            off = np.abs((verts[cand] - p[0]) @ n)
        for v in cand[off <= tol]:
            if _inside_face(verts[v], p, tol):
                bad.append((f, int(v)))
    return bad


def _inside_face(x, p, tol):
    if len(p) == 2:
        t = p[1] - p[0]
        s = np.dot(x - p[0], t) / np.dot(t, t)
        return tol / np.linalg.norm(t) < s < 1 - tol / np.linalg.norm(t)
    # polygon in 3D: angle-sum test on the fan triangles
    for j in range(1, len(p) - 1):
        a, b, c = p[0], p[j], p[j + 1]
        m = np.c_[b - a, c - a]
        lam, *_ = np.linalg.lstsq(m, x - a, rcond=None)
        l0 = 1 - lam.sum()
        if min(l0, *lam) > -tol and not np.any(np.isclose(np.r_[l0, lam], 0, atol=tol)):
            return True
    return False
