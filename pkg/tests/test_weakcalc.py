import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wg_elast.mesh import (
    build_mesh,
    generate_cube_tet_mesh,
    generate_ladder_mesh,
    generate_triangle_mesh,
)
from wg_elast.polyquad import cell_basis, project_face, project_interior, quad_cell
from wg_elast.verify.properties import broken_gradient_residual, commutation_residual
from wg_elast.weakcalc import weak_divergence_local, weak_gradient_local, weak_gradient_vector

MESHES = {
    "triangle": generate_triangle_mesh(2),
    "ladder": generate_ladder_mesh(3),
    "tet": generate_cube_tet_mesh(1),
    "pentagon": build_mesh(np.array([[0, 0], [1, 0], [1.3, 0.6], [0.5, 1.1], [-0.2, 0.6]]),
                           [(0, 1, 2, 3, 4)]),
}


def rms(mesh, cell, degree, coef):
    """Root-mean-square over the cell of the field with component-major coefficients."""
    basis = cell_basis(mesh, cell, degree)
    rule = quad_cell(mesh, cell, 2 * degree + 2)
    vals = basis(rule.points) @ np.reshape(coef, (-1, basis.dim)).T
    return float(np.sqrt(rule.integrate(vals**2).sum() / rule.weights.sum()))


def project_pair(f, mesh, cell, k):
    """Interior ``Q_{k+1}`` and per-face ``Q_{k+1}^b`` coefficients of a scalar ``f``."""
    vi = project_interior(f, k + 1, mesh, cell)
    tr = np.stack([project_face(f, k + 1, mesh, s) for s in mesh.cell_skeleton(cell)])
    return vi, tr


@pytest.mark.parametrize("name", sorted(MESHES))
@pytest.mark.parametrize("k", [0, 1, 2])
def test_gradient_of_constant_vanishes(name, k):
    mesh = MESHES[name]
    for c in range(min(mesh.n_cells, 3)):
        vi, tr = project_pair(lambda x: np.full(len(x), 2.5), mesh, c, k)
        g = weak_gradient_local(mesh, c, k)(vi, tr)
        assert rms(mesh, c, k, g) < 1e-12 * 2.5 / mesh.h_cell[c]


@pytest.mark.parametrize("name", sorted(MESHES))
@pytest.mark.parametrize("k", [0, 1, 2])
def test_gradient_of_linear_is_exact(name, k):
    mesh = MESHES[name]
    d = mesh.dim
    for c in range(min(mesh.n_cells, 3)):
        vi, tr = project_pair(lambda x: x[:, 0], mesh, c, k)
        g = weak_gradient_local(mesh, c, k)(vi, tr).reshape(d, -1)
        g[0, 0] -= 1.0
        assert rms(mesh, c, k, g) < 1e-12


def test_unit_trace_zero_interior():
    m = build_mesh(np.array([[0, 0], [1, 0], [0, 1]], dtype=float), [(0, 1, 2)])
    op = weak_gradient_local(m, 0, 0)
    g = op(np.zeros(3), np.tile([1.0, 0.0], (3, 1)))
    assert np.abs(g).max() < 1e-14


@pytest.mark.parametrize("name", sorted(MESHES))
def test_divergence_of_constant_vanishes(name):
    mesh = MESHES[name]
    d = mesh.dim
    c = np.arange(1.0, d + 1)
    f = lambda x: np.tile(c, (len(x), 1))       # noqa: E731
    for k in range(3):
        op = weak_divergence_local(mesh, 0, k + 1)
        vi = project_interior(f, k, mesh, 0).T.ravel()
        tr = np.concatenate([project_face(f, k + 1, mesh, s).T.ravel()
                             for s in mesh.cell_skeleton(0)])
        assert rms(mesh, 0, k + 1, op(vi, tr)) < 1e-12 * d / mesh.h_cell[0]


@pytest.mark.parametrize("name", sorted(MESHES))
@pytest.mark.parametrize("k", [0, 1, 2])
def test_commutation(name, k):
    mesh = MESHES[name]
    rng = np.random.default_rng(k)
    for c in range(min(mesh.n_cells, 3)):
        assert commutation_residual(mesh, c, k, rng) < 1e-11


@pytest.mark.parametrize("name", ["triangle", "ladder", "pentagon"])
def test_divergence_free_field(name):
    mesh = MESHES[name]

    # tau = rot psi with psi = x^3 y^2 - x y^4 + 2 x^2 y
    def tau(x):
        X, Y = x[:, 0], x[:, 1]
        return np.stack([2 * X**3 * Y - 4 * X * Y**3 + 2 * X**2,
                         -(3 * X**2 * Y**2 - Y**4 + 4 * X * Y)], axis=1)

    for k in range(3):
        for c in range(min(mesh.n_cells, 3)):
            op = weak_divergence_local(mesh, c, k + 1)
            vi = project_interior(tau, k, mesh, c).T.ravel()
            tr = np.concatenate([project_face(tau, k + 1, mesh, s).T.ravel()
                                 for s in mesh.cell_skeleton(c)])
            assert rms(mesh, c, k + 1, op(vi, tr)) < 1e-11


@given(st.integers(0, 2**32 - 1), st.sampled_from(sorted(MESHES)), st.integers(0, 2))
@settings(max_examples=40, deadline=None)
def test_broken_gradient_identity(seed, name, k):
    mesh = MESHES[name]
    rng = np.random.default_rng(seed)
    cell = int(rng.integers(mesh.n_cells))
    assert broken_gradient_residual(mesh, cell, k, rng) < 1e-11


@pytest.mark.parametrize("name", sorted(MESHES))
def test_vector_gradient_is_rowwise(name):
    mesh = MESHES[name]
    d = mesh.dim
    rng = np.random.default_rng(3)
    op = weak_gradient_local(mesh, 0, 1)
    nint = cell_basis(mesh, 0, 2).dim
    ntr = (op.matrix.shape[1] - nint) // len(mesh.cell_skeleton(0))
    vi = rng.standard_normal((d, nint))
    tr = rng.standard_normal((len(mesh.cell_skeleton(0)), d, ntr))
    g = weak_gradient_vector(mesh, 0, 1, vi, tr)
    for j in range(d):
        np.testing.assert_allclose(g[j].ravel(), op(vi[j], tr[:, j, :]), rtol=0, atol=1e-13)
