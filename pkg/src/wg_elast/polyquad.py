"""Quadrature on simplices and polytopal cells, scaled monomial bases and
L2 projections onto cell and face polynomial spaces.

Reference simplex rules are conical (collapsed) Gauss-Jacobi products.  They
are stored in barycentric coordinates with weights normalised to sum to one,
so mapping to a physical simplex only needs its vertices and measure.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

from .errors import SingularMass, UnsupportedOrder

MAX_ORDER = 40


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray   # (nq, d) physical coordinates
    weights: np.ndarray  # (nq,)
    order: int

    def integrate(self, values):
        return np.tensordot(self.weights, values, axes=(0, 0))


@functools.lru_cache(maxsize=None)
def simplex_rule(dim: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric points ``(nq, dim+1)`` and weights summing to 1.

    Exact for polynomials of total degree ``order`` on a ``dim``-simplex.
    """
    if order < 0 or order > MAX_ORDER:
        raise UnsupportedOrder(f"quadrature order {order} outside [0, {MAX_ORDER}]")
    if dim == 0:
        return np.ones((1, 1)), np.ones(1)
    n = order // 2 + 1
    # collapsed coordinate t_m carries the Jacobi weight (1 - t)^(dim - 1 - m)
    axes = []
    for m in range(dim):
        a = dim - 1 - m
        x, w = special.roots_jacobi(n, a, 0)
        axes.append(((1.0 + x) / 2.0, w / 2.0 ** (a + 1)))
    pts, wts = [], []
    for combo in itertools.product(*[range(n)] * dim):
        t = [axes[m][0][i] for m, i in enumerate(combo)]
        w = math.prod(axes[m][1][i] for m, i in enumerate(combo))
        # Duffy map: x_m = t_m * prod_{l<m} (1 - t_l)
        x = []
        scale = 1.0
        for m in range(dim):
            x.append(t[m] * scale)
            scale *= 1.0 - t[m]
        pts.append([1.0 - sum(x)] + x)
        wts.append(w)
    wts = np.asarray(wts)
    return np.asarray(pts), wts / wts.sum()


def simplex_measure(coords):
    """Measure of simplices given vertex coordinates ``(..., m+1, d)``."""
    coords = np.asarray(coords, dtype=float)
    edges = coords[..., 1:, :] - coords[..., :1, :]
    m = edges.shape[-2]
    gram = np.einsum("...id,...jd->...ij", edges, edges)
    return np.sqrt(np.abs(np.linalg.det(gram))) / math.factorial(m)


def map_simplex_rule(coords, order):
    """Map the reference rule onto simplices ``coords`` of shape ``(..., m+1, d)``.

    Returns points ``(..., nq, d)`` and weights ``(..., nq)``.
    """
    coords = np.asarray(coords, dtype=float)
    m = coords.shape[-2] - 1
    bary, w = simplex_rule(m, order)
    pts = np.einsum("qi,...id->...qd", bary, coords)
    wts = simplex_measure(coords)[..., None] * w
    return pts, wts


# ---------------------------------------------------------------------------
# scaled monomials


@functools.lru_cache(maxsize=None)
def monomial_exponents(dim: int, degree: int) -> np.ndarray:
    """Graded exponents, so the degree-j basis is a prefix of degree j+1."""
    out = []
    for total in range(degree + 1):
        for alpha in itertools.product(range(total, -1, -1), repeat=dim):
            if sum(alpha) == total:
                out.append(alpha)
    out = sorted(out, key=lambda a: (sum(a), tuple(-x for x in a)))
    return np.asarray(out, dtype=int).reshape(-1, dim)


def n_monomials(dim, degree):
    return math.comb(degree + dim, dim)


def monomials(x, center, h, degree, grad=False):
    """Evaluate ``((x - center)/h)**alpha`` for all ``|alpha| <= degree``.

    ``x`` has shape ``(..., d)``; ``center`` and ``h`` broadcast against
    ``x[..., :]`` and ``x[..., 0]``.  Gradients are with respect to ``x``.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    h = np.asarray(h, dtype=float)[..., None]
    y = (x - center) / h
    exps = monomial_exponents(d, degree)
    pw = y[..., :, None] ** np.arange(degree + 1)   # (..., d, degree+1)
    fac = pw[..., np.arange(d)[None, :], exps]      # (..., n, d)
    vals = np.prod(fac, axis=-1)
    if not grad:
        return vals
    grads = np.empty(vals.shape + (d,))
    for l in range(d):
        e = exps[:, l]
        dl = np.where(e > 0, e * pw[..., l, np.maximum(e - 1, 0)], 0.0)
        others = np.prod(np.delete(fac, l, axis=-1), axis=-1)
        grads[..., l] = dl * others / h
    return vals, grads


@dataclass(frozen=True)
class CellBasis:
    """Scaled monomials of degree ``degree`` centred at the cell centroid."""

    degree: int
    cell: int
    center: np.ndarray
    h: float

    @property
    def dim(self):
        return n_monomials(len(self.center), self.degree)

    def __call__(self, x, grad=False):
        return monomials(x, self.center, self.h, self.degree, grad=grad)


@dataclass(frozen=True)
class FaceBasis:
    """Monomials in an orthonormal face frame anchored at the lowest vertex.

    Local coordinate is ``frame.T @ (x - anchor) / h``; in 2D this is the
    arclength from the lower vertex id divided by the edge length.
    """

    degree: int
    face: int
    anchor: np.ndarray
    frame: np.ndarray   # (d, d-1)
    h: float

    @property
    def dim(self):
        return n_monomials(self.frame.shape[1], self.degree)

    def local(self, x):
        return (np.asarray(x) - self.anchor) @ self.frame / self.h

    def __call__(self, x):
        s = self.local(x)
        return monomials(s, 0.0, 1.0, self.degree)


def face_frame(coords):
    """Orthonormal tangent frame of a face given its vertices (lowest id first)."""
    coords = np.asarray(coords, dtype=float)
    edges = (coords[1:] - coords[0]).T
    q, _ = np.linalg.qr(edges)
    # QR may flip signs; keep the first axis along the first edge
    for j in range(q.shape[1]):
        if np.dot(q[:, j], edges[:, j]) < 0:
            q[:, j] = -q[:, j]
    return q


def cell_basis(mesh, cell, degree):
    return CellBasis(degree, cell, mesh.centroid[cell], float(mesh.h_cell[cell]))


def face_basis(mesh, face, degree):
    """Basis on skeleton face ``face`` (vertices already sorted by id)."""
    coords = mesh.skel_coords(face)
    return FaceBasis(degree, face, coords[0], face_frame(coords), float(mesh.skel_h[face]))


def quad_cell(mesh, cell, order) -> QuadratureRule:
    """Quadrature over a cell via its sub-simplices w(T)."""
    pts, wts = map_simplex_rule(mesh.cell_simplices(cell), order)
    return QuadratureRule(pts.reshape(-1, mesh.dim), wts.ravel(), order)


def quad_face(mesh, face, order) -> QuadratureRule:
    pts, wts = map_simplex_rule(mesh.skel_coords(face), order)
    return QuadratureRule(pts, wts, order)


def _solve_mass(mass, rhs):
    try:
        factor = linalg.cho_factor(mass)
    except linalg.LinAlgError as exc:
        raise SingularMass(str(exc)) from exc
    return linalg.cho_solve(factor, rhs)


def mass_matrix(basis, rule):
    v = basis(rule.points)
    return np.einsum("q,qa,qb->ab", rule.weights, v, v)


def project_interior(f, j, mesh, cell, order=None):
    """Coefficients of Q_j^i f in the scaled monomial basis of ``cell``.

    ``f`` maps points ``(nq, d)`` to values ``(nq,)`` or ``(nq, m)``.
    """
    basis = cell_basis(mesh, cell, j)
    rule = quad_cell(mesh, cell, order if order is not None else 2 * j + 8)
    v = basis(rule.points)
    rhs = np.tensordot(v * rule.weights[:, None], f(rule.points), axes=(0, 0))
    return _solve_mass(np.einsum("q,qa,qb->ab", rule.weights, v, v), rhs)


def project_face(f, j, mesh, face, order=None):
    """Coefficients of Q_j^b f in the face basis of skeleton face ``face``."""
    basis = face_basis(mesh, face, j)
    rule = quad_face(mesh, face, order if order is not None else 2 * j + 8)
    v = basis(rule.points)
    rhs = np.tensordot(v * rule.weights[:, None], f(rule.points), axes=(0, 0))
    return _solve_mass(np.einsum("q,qa,qb->ab", rule.weights, v, v), rhs)


# ---------------------------------------------------------------------------
# equispaced Lagrange functions on simplices (skeleton traces)


@functools.lru_cache(maxsize=None)
def lagrange_multi_indices(n_vertices: int, degree: int) -> tuple[tuple[int, ...], ...]:
    """Multi-indices ``alpha`` with ``sum(alpha) == degree``; vertices first."""
    out = [a for a in itertools.product(range(degree, -1, -1), repeat=n_vertices)
           if sum(a) == degree]
    return tuple(sorted(out, key=lambda a: (-max(a), sum(x > 0 for x in a), tuple(-x for x in a))))


def lagrange_values(bary, degree):
    """Values ``(nq, n_nodes)`` of the equispaced Lagrange basis at barycentric points."""
    bary = np.asarray(bary, dtype=float)
    mis = lagrange_multi_indices(bary.shape[-1], degree)
    out = np.ones(bary.shape[:-1] + (len(mis),))
    for n, alpha in enumerate(mis):
        for j, a in enumerate(alpha):
            for m in range(a):
                out[..., n] *= (degree * bary[..., j] - m) / (m + 1)
    return out
