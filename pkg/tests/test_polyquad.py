import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from wg_elast.errors import UnsupportedOrder
from wg_elast.mesh import build_mesh, generate_triangle_mesh
from wg_elast.polyquad import (
    cell_basis,
    face_basis,
    mass_matrix,
    monomial_exponents,
    project_face,
    project_interior,
    quad_cell,
    quad_face,
    simplex_rule,
)

SQUARE = build_mesh(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float), [(0, 1, 2, 3)])
REF_TRIANGLE = build_mesh(np.array([[0, 0], [1, 0], [0, 1]], dtype=float), [(0, 1, 2)])


def exact_simplex_moment(alpha):
    """Integral of ``x^alpha`` over the reference simplex, Dirichlet formula."""
    d = len(alpha)
    return math.prod(math.factorial(a) for a in alpha) / math.factorial(sum(alpha) + d)


def test_unit_square_area():
    assert abs(quad_cell(SQUARE, 0, 4).weights.sum() - 1.0) < 1e-13


def test_square_fan_moment():
    rule = quad_cell(SQUARE, 0, 4)
    x, y = rule.points.T
    assert abs(rule.integrate(x**2 * y**2) - 1 / 9) < 1e-13


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_simplex_rule_exact_for_products(dim, k):
    order = 2 * (k + 1) + 2
    bary, w = simplex_rule(dim, order)
    x = bary[:, 1:]
    vol = 1 / math.factorial(dim)
    for alpha in monomial_exponents(dim, order):
        approx = vol * w @ np.prod(x**alpha, axis=1)
        assert abs(approx - exact_simplex_moment(alpha)) < 1e-12


def test_simplex_rule_order_limit():
    with pytest.raises(UnsupportedOrder):
        simplex_rule(2, 99)


@pytest.mark.parametrize("j", [0, 1, 2, 3])
def test_projection_reproduces_polynomials(j):
    rng = np.random.default_rng(j)
    basis = cell_basis(SQUARE, 0, j)
    coef = rng.standard_normal(basis.dim)
    got = project_interior(lambda x: basis(x) @ coef, j, SQUARE, 0)
    assert np.abs(got - coef).max() < 1e-12


def test_projection_of_x_onto_constants_is_mean():
    coef = project_interior(lambda x: x[:, 0], 0, REF_TRIANGLE, 0)
    assert abs(coef[0] - 1 / 3) < 1e-14


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.integers(0, 3))
@settings(max_examples=100, deadline=None)
def test_interior_projection_stable_and_orthogonal(params, j):
    a, b, c, e = params

    def raw(x):
        return np.sin(a * x[:, 0] + b) * np.cos(c * x[:, 1]) + e * x[:, 0] ** 5

    rule = quad_cell(SQUARE, 0, 2 * j + 14)
    # the projection is linear; unit scaling keeps squares clear of underflow
    scale = np.abs(raw(rule.points)).max()
    assume(scale > 0)

    def f(x):
        return raw(x) / scale

    basis = cell_basis(SQUARE, 0, j)
    v = basis(rule.points)
    q = v @ project_interior(f, j, SQUARE, 0, order=2 * j + 14)
    fv = f(rule.points)
    nf = np.sqrt(rule.integrate(fv**2))
    assert np.sqrt(rule.integrate(q**2)) <= nf * (1 + 1e-12)
    ip = rule.integrate((fv - q)[:, None] * v)
    normp = np.sqrt(rule.integrate(v**2))
    assert np.all(np.abs(ip) <= 1e-11 * nf * normp)


def test_face_projection_of_s_squared():
    m = build_mesh(np.array([[0, 0], [1, 0], [0.3, 0.8]]), [(0, 1, 2)])
    edge = next(s for s, f in enumerate(m.skel_faces) if tuple(f) == (0, 1))
    coef = project_face(lambda x: x[:, 0] ** 2, 1, m, edge)
    np.testing.assert_allclose(coef, [-1 / 6, 1.0], atol=1e-14)


@given(st.floats(0.5, 4), st.integers(0, 2))
@settings(max_examples=50, deadline=None)
def test_face_projection_stable(freq, j):
    m = generate_triangle_mesh(1)
    for s in range(m.n_skel):
        rule = quad_face(m, s, 20)

        def f(x):
            return np.exp(freq * x[:, 0]) * np.sin(freq * x[:, 1] + 1)

        q = face_basis(m, s, j)(rule.points) @ project_face(f, j, m, s, order=20)
        assert rule.integrate(q**2) <= rule.integrate(f(rule.points) ** 2) * (1 + 1e-12)


@pytest.mark.parametrize("j", [0, 1])
def test_projection_approximation_rate(j):
    def f(x):
        return np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])

    errs = []
    for n in (8, 16):
        m = generate_triangle_mesh(n)
        tot = 0.0
        for c in range(m.n_cells):
            rule = quad_cell(m, c, 2 * j + 10)
            q = cell_basis(m, c, j)(rule.points) @ project_interior(f, j, m, c)
            tot += rule.integrate((f(rule.points) - q) ** 2)
        errs.append(np.sqrt(tot))
    assert abs(np.log2(errs[0] / errs[1]) - (j + 1)) < 0.15


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_mass_matrix_spd(k):
    m = generate_triangle_mesh(2)
    M = mass_matrix(cell_basis(m, 0, k), quad_cell(m, 0, 2 * k + 2))
    np.testing.assert_allclose(M, M.T, atol=1e-15)
    assert np.linalg.eigvalsh(M).min() > 0
