import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wg_elast.errors import BudgetExceeded
from wg_elast.mesh import GENERATORS, generate_cube_tet_mesh
from wg_elast.verify import (
    CSV_HEADER,
    convergence_study,
    estimate_dofs,
    fd_divergence,
    lambda_sweep,
    make_case,
    rates,
    run_level,
    run_on_mesh,
)
from wg_elast.wgspace import build_dof_map

RNG = np.random.default_rng(3)


@pytest.mark.parametrize("name", ["2d", "3d"])
@pytest.mark.parametrize("lam", [1.0, 1e3, 1e6])
def test_body_force_is_divergence_of_stress(name, lam):
    case = make_case(name, lam)
    x = 0.1 + 0.8 * RNG.random((40, case.dim))
    f = case.f(x)
    fd = fd_divergence(case.sigma, x, step=1e-4)
    assert np.abs(f - fd).max() < 1e-6 * max(1.0, np.abs(f).max())


@pytest.mark.parametrize("name", ["2d", "3d"])
def test_exact_displacement_vanishes_on_boundary(name):
    case = make_case(name, 1.0)
    x = RNG.random((50, case.dim))
    for ax in range(case.dim):
        for side in (0.0, 1.0):
            y = x.copy()
            y[:, ax] = side
            assert np.abs(case.u(y)).max() < 1e-12


def test_3d_field_is_divergence_free():
    case = make_case("3d", 1.0)
    x = RNG.random((50, 3))
    assert np.abs(np.trace(case.grad_u(x), axis1=-2, axis2=-1)).max() < 1e-12


@pytest.mark.parametrize("name", ["2d", "3d"])
def test_exact_stress_is_symmetric(name):
    s = make_case(name, 10.0).sigma(RNG.random((20, 2 if name == "2d" else 3)))
    assert np.array_equal(s, np.swapaxes(s, -1, -2))


def test_rates_of_halving_sequence():
    assert rates([1.0, 0.25, 0.0625]) == [None, 2.0, 2.0]
    assert rates([1.0, 0.0]) == [None, None]


@pytest.mark.parametrize("kind, sizes", [("triangle", [1, 2, 5]), ("ladder", [2, 3, 4, 5]),
                                         ("cube", [1, 2, 3])])
@pytest.mark.parametrize("k", [0, 1, 2])
def test_estimated_dofs_match_dof_map(kind, sizes, k):
    for n in sizes:
        assert estimate_dofs(kind, k, n) == build_dof_map(GENERATORS[kind](n), k).n_skeleton


def test_table_dof_counts_closed_form():
    counts = [estimate_dofs("triangle", 0, 2 ** L) for L in range(2, 9)]
    assert counts == [75, 243, 867, 3267, 12675, 49923, 198147]


def test_lambda_sweep_same_lambda_gives_unit_ratio():
    out = lambda_sweep("2d", 0, 2, lambdas=(1.0, 1.0))
    assert out["ratio_u"] == 1.0 and out["ratio_sigma"] == 1.0


def test_errors_decrease_under_refinement():
    a = run_level("2d", 1, 1.0, 4)
    b = run_level("2d", 1, 1.0, 8)
    for name in ("err_u", "err_sigma", "err_gradu"):
        assert getattr(b, name) < getattr(a, name) < 1.0


def test_level_result_carries_diagnostics():
    r = run_level("2d", 0, 1e3, 4)
    assert r.dofs == 75 and r.level == 4
    assert r.residual < 1e-9 and r.symmetry < 1e-12
    assert r.method == "ldlt" and not r.expect_definite


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        run_on_mesh("2d", 0, 1.0, generate_cube_tet_mesh(1))


def test_budget_guard():
    with pytest.raises(BudgetExceeded):
        convergence_study("2d", 0, [1.0], [2, 9], budget=10_000)


def test_csv_format():
    report = convergence_study("2d", 0, [1.0, 1e3], [1, 2])
    rows = list(csv.reader(io.StringIO(report.to_csv())))
    assert rows[0] == CSV_HEADER
    assert len(rows) == 5
    assert rows[1][:5] == ["2d", "0", "1", "2", "27"]
    assert rows[1][6] == "" and rows[2][6] != ""
    assert rows[3][2] == "1000"
    float(rows[2][5])
    assert rows[2][6] == f"{np.log2(float(rows[1][5]) / float(rows[2][5])):.4f}"


def test_parallel_jobs_match_serial():
    a = convergence_study("2d", 0, [1.0, 1e6], [1, 2], jobs=1).to_csv()
    b = convergence_study("2d", 0, [1.0, 1e6], [1, 2], jobs=2).to_csv()
    assert a == b


@given(st.floats(0.1, 10.0), st.floats(1.0, 1e6))
@settings(max_examples=10, deadline=None)
def test_force_matches_navier_form(mu, lam):
    # f = div(2 mu eps + lam tr(eps) I), checked against finite differences
    case = make_case("2d", lam, mu)
    x = 0.2 + 0.6 * np.random.default_rng(int(mu * 1e3)).random((10, 2))
    f = case.f(x)
    assert np.abs(f - fd_divergence(case.sigma, x, 1e-4)).max() < 1e-6 * max(1.0, np.abs(f).max())
