import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wg_elast.errors import EmptyDirichlet
from wg_elast.mesh import (
    build_mesh,
    generate_cube_tet_mesh,
    generate_ladder_mesh,
    generate_triangle_mesh,
    with_markers,
)
from wg_elast.verify.properties import mean_preservation_residual
from wg_elast.wgspace import (
    build_dof_map,
    dirichlet_faces,
    lagrange_face_mass,
    scott_zhang_boundary,
)


@pytest.mark.parametrize("n, dofs", [(4, 75), (16, 867)])
def test_triangle_skeleton_dofs(n, dofs):
    assert build_dof_map(generate_triangle_mesh(n), 0).n_skeleton == dofs


def test_single_triangle_local_sizes():
    m = build_mesh(np.array([[0, 0], [1, 0], [0, 1]], dtype=float), [(0, 1, 2)])
    dm = build_dof_map(m, 1)
    assert (dm.n_sigma_local, dm.n_u_local) == (9, 12)


def test_free_dofs_triangle_n4():
    dm = build_dof_map(generate_triangle_mesh(4), 0)
    assert dm.dirichlet_dofs.size == 32
    assert dm.free_dofs.size == 43


@pytest.mark.parametrize("k", [0, 1, 2])
def test_shared_nodes_have_one_id(k):
    m = generate_ladder_mesh(3)
    dm = build_dof_map(m, k)
    # every node coordinate appears once
    rounded = {tuple(np.round(x, 12)) for x in dm.node_coords}
    assert len(rounded) == dm.n_nodes
    # and every skeleton face node sits where its key says
    for s in range(m.n_skel):
        a, b = m.vertices[m.skel_faces[s]]
        for node in dm.skel_nodes[s]:
            x = dm.node_coords[node]
            t, r = b - a, x - a
            assert abs(t[0] * r[1] - t[1] * r[0]) < 1e-12


def test_no_dirichlet_faces():
    m = with_markers(generate_triangle_mesh(2), neumann=lambda mid: True)
    with pytest.raises(EmptyDirichlet):
        scott_zhang_boundary(lambda x: x[..., 0], m, 0)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_zero_data(k):
    m = generate_triangle_mesh(3)
    sz = scott_zhang_boundary(lambda x: np.zeros(x.shape[:-1] + (2,)), m, k)
    assert np.all(sz.values == 0)


def boundary_values(m, k, interp, dm):
    nodes = np.unique(dm.skel_nodes[dirichlet_faces(m)])
    return nodes, interp.values[nodes]


@pytest.mark.parametrize("mesh", [generate_triangle_mesh(4), generate_ladder_mesh(4),
                                  generate_cube_tet_mesh(2)], ids=["triangle", "ladder", "cube"])
@pytest.mark.parametrize("k", [0, 1, 2])
def test_reproduces_continuous_piecewise_polynomials(mesh, k):
    dm = build_dof_map(mesh, k)

    def kinked(x):
        # kink only along y = 0.5, a mesh line of every family at even n
        return 2 * np.abs(x[..., 1] - 0.5) + x[..., 0] ** (k + 1) - x[..., -1]

    sz = scott_zhang_boundary(kinked, mesh, k, dm)
    nodes, vals = boundary_values(mesh, k, sz, dm)
    assert np.abs(vals - kinked(dm.node_coords[nodes])).max() < 1e-12


def test_mean_on_left_edge():
    m = with_markers(generate_triangle_mesh(4), neumann=lambda mid: mid[0] > 1e-12)
    for g in (lambda x: x[..., 0], lambda x: np.exp(x[..., 1])):
        for k in (0, 1):
            dm = build_dof_map(m, k)
            sz = scott_zhang_boundary(g, m, k, dm)
            lhs = rhs = 0.0
            for s in dirichlet_faces(m):
                _, lam, pts, w = lagrange_face_mass(m, s, k + 1, 12)
                lhs += w @ (lam @ sz.values[dm.skel_nodes[s]])
                rhs += w @ g(pts)
            assert abs(lhs - rhs) < 1e-12


MEAN_MESHES = {"triangle": generate_triangle_mesh(3), "ladder": generate_ladder_mesh(3),
               "cube": generate_cube_tet_mesh(2)}


@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.sampled_from(sorted(MEAN_MESHES)),
       st.integers(0, 2))
@settings(max_examples=30, deadline=None)
def test_mean_preservation(params, name, k):
    a, b, c = params
    m = MEAN_MESHES[name]

    def g(x):
        return np.stack([np.sin(a * x[..., 0] + b * x[..., 1]) + c,
                         np.exp(a * x[..., -1]) * np.cos(b + x[..., 0])], axis=-1)

    dm = build_dof_map(m, k)
    assert mean_preservation_residual(m, k, g, scott_zhang_boundary(g, m, k, dm), dm) < 1e-11


@pytest.mark.parametrize("name, k", [("triangle", 0), ("triangle", 1), ("ladder", 0),
                                     ("cube", 0), ("cube", 1), ("cube", 2)])
def test_locality(name, k):
    m = {"triangle": generate_triangle_mesh(6), "ladder": generate_ladder_mesh(6),
         "cube": generate_cube_tet_mesh(3)}[name]
    dm = build_dof_map(m, k)
    faces = dirichlet_faces(m)
    target = faces[len(faces) // 2]
    fv = m.vertices[m.skel_faces[target]]
    centre = fv.mean(axis=0)
    radius = 0.25 * np.linalg.norm(fv - centre, axis=1).min()

    def g(x):
        return np.sin(3 * x[..., 0]) + x[..., 1]

    def bumped(x):
        r = np.linalg.norm(x - centre, axis=-1)
        return g(x) + np.where(r < radius, (1 - (r / radius) ** 2) ** 3, 0.0)

    v0 = scott_zhang_boundary(g, m, k, dm).values
    v1 = scott_zhang_boundary(bumped, m, k, dm).values
    changed = np.flatnonzero(np.abs(v1 - v0) > 1e-14)
    assert changed.size > 0
    # allowed: nodes on Dirichlet faces within two vertex-rings of the perturbed face
    ring = set(m.skel_faces[target].tolist())
    for _ in range(2):
        touching = [s for s in faces if ring & set(m.skel_faces[s].tolist())]
        ring = set(m.skel_faces[touching].ravel().tolist())
    allowed = set(dm.skel_nodes[[s for s in faces if set(m.skel_faces[s].tolist()) <= ring]]
                  .ravel().tolist())
    assert set(changed.tolist()) <= allowed


@pytest.mark.parametrize("k", [0, 1])
def test_boundary_approximation_rate(k):
    def g(x):
        return np.sin(2 * np.pi * (x[..., 0] + x[..., 1]))

    errs = []
    for n in (8, 16):
        m = generate_triangle_mesh(n)
        dm = build_dof_map(m, k)
        sz = scott_zhang_boundary(g, m, k, dm)
        tot = 0.0
        for s in dirichlet_faces(m):
            _, lam, pts, w = lagrange_face_mass(m, s, k + 1, 2 * k + 12)
            tot += w @ (lam @ sz.values[dm.skel_nodes[s]] - g(pts)) ** 2
        errs.append(np.sqrt(tot))
    assert abs(np.log2(errs[0] / errs[1]) - (k + 2)) < 0.2
