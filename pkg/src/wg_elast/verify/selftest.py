"""Quick structural self-check on small meshes, used by ``wg-elast selftest``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..assembly import ElasticityProblem, LameParameters, assemble_global, recover_interior
from ..mesh import (
    build_mesh,
    generate_cube_tet_mesh,
    generate_ladder_mesh,
    generate_triangle_mesh,
)
from ..solver import solve
from ..wgspace import build_dof_map, scott_zhang_boundary
from . import properties as P


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tol: float

    @property
    def ok(self):
        return bool(np.isfinite(self.value) and self.value <= self.tol)

    def line(self):
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name:<40s} {self.value:.2e} (tol {self.tol:.0e})"


def _smooth_force(x):
    return np.stack([np.sin(x[..., 0] + 2 * x[..., 1])] +
                    [np.cos(3 * x[..., j]) for j in range(1, x.shape[-1])], axis=-1)


def _smooth_boundary(x):
    return np.stack([x[..., 0] * x[..., 1]] +
                    [0.1 * np.exp(x[..., 0])] * (x.shape[-1] - 1), axis=-1)


def small_meshes():
    """Meshes with at most three cells for the condensation oracle."""
    square_and_triangle = build_mesh(
        np.array([[0, 0], [1, 0], [1, 1], [0, 1], [2, 0.5]], dtype=float),
        [[0, 1, 2, 3], [1, 4, 2]])
    pentagon_pair = build_mesh(
        np.array([[0, 0], [1, 0], [1.3, 0.6], [0.5, 1.1], [-0.2, 0.6], [2, 0.2], [1.8, 1]],
                 dtype=float),
        [[0, 1, 2, 3, 4], [1, 5, 6, 2], [2, 6, 3]])
    tets = build_mesh(
        np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]], dtype=float),
        [[0, 1, 2, 3], [1, 2, 3, 4]])
    return {"triangle": generate_triangle_mesh(1), "polygons": square_and_triangle,
            "mixed polygons": pentagon_pair, "tets": tets}


def run_selftest(seed=0, max_k=2):
    rng = np.random.default_rng(seed)
    meshes = {"triangle": generate_triangle_mesh(2), "ladder": generate_ladder_mesh(2),
              "tet": generate_cube_tet_mesh(1)}
    tiny = small_meshes()
    out = []
    for name, mesh in meshes.items():
        for k in range(max_k + 1):
            tag = f"{name} k={k}"
            out.append(CheckResult(f"projection {tag}", max(
                P.projection_residual(mesh, c, k, rng) for c in range(min(3, mesh.n_cells))), 1e-11))
            out.append(CheckResult(f"commutation {tag}", max(
                P.commutation_residual(mesh, c, k, rng) for c in range(min(3, mesh.n_cells))), 1e-11))
            out.append(CheckResult(f"broken gradient {tag}", max(
                P.broken_gradient_residual(mesh, c, k, rng) for c in range(min(3, mesh.n_cells))),
                1e-11))
            out.append(CheckResult(f"inf-sup identity {tag}",
                                   P.inf_sup_residual(mesh, k, rng, 2, cells=[0, 1]), 1e-11))
            dm = build_dof_map(mesh, k)
            interp = scott_zhang_boundary(_smooth_boundary, mesh, k, dm)
            out.append(CheckResult(f"Scott-Zhang mean {tag}", P.mean_preservation_residual(
                mesh, k, _smooth_boundary, interp, dm), 1e-11))
    for d, lame in ((2, LameParameters(1.0, 1e6)), (3, LameParameters(0.5, 1.0))):
        out.append(CheckResult(f"compliance identities d={d}",
                               P.algebraic_identity_residual(rng, d, lame), 1e-13))
    for name, mesh in tiny.items():
        for k in range(max_k + 1):
            pb = ElasticityProblem(LameParameters(1.0, 10.0), k, f=_smooth_force, g_D=_smooth_boundary)
            diff, res = P.condensation_residual(mesh, pb)
            out.append(CheckResult(f"condensed vs monolithic {name} k={k}", diff, 1e-10))
            out.append(CheckResult(f"monolithic residual {name} k={k}", res, 1e-9))
    for name, mesh in meshes.items():
        for k in range(max_k + 1):
            pb = ElasticityProblem(LameParameters(1.0, 10.0), k)
            system = assemble_global(mesh, pb)
            x, _ = solve(system.matrix, system.rhs)
            sol = recover_interior(system, x, mesh)
            zero = max(np.abs(x).max(initial=0.0), np.abs(sol.sigma).max(), np.abs(sol.u).max())
            out.append(CheckResult(f"zero data {name} k={k}", zero, 0.0))
            pb = ElasticityProblem(LameParameters(1.0, 10.0), k, f=_smooth_force,
                                   g_D=_smooth_boundary)
            system = assemble_global(mesh, pb)
            K = system.matrix
            out.append(CheckResult(f"symmetry {name} k={k}",
                                   abs(K - K.T).max() / abs(K).max(), 1e-12))
            _, report = solve(K, system.rhs)
            out.append(CheckResult(f"solve residual {name} k={k}", report.residual, 1e-9))
    return out


def summarize(results):
    passed = sum(r.ok for r in results)
    return passed, len(results) - passed
