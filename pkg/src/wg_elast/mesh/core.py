"""Polytopal mesh data model.

A mesh stores cells as vertex loops (2D, counter-clockwise, hanging nodes
included) or as lists of face loops (3D, outward oriented).  Construction
extracts the proper faces, classifies boundary faces, picks a star centre
M_T per cell and builds the auxiliary simplicial submesh w(T) together with
the refined skeleton E_h* (the sub-faces of w(T) lying on cell boundaries).
"""

from __future__ import annotations

import enum
import itertools
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ..errors import NonStarShaped, TopologyError
from ..polyquad import simplex_measure


class Marker(enum.IntEnum):
    INTERIOR = 0
    DIRICHLET = 1
    NEUMANN = 2


@dataclass(frozen=True)
class ProperFace:
    id: int
    vertices: tuple[int, ...]
    h: float
    marker: Marker
    cells: tuple[int, ...]


@dataclass(frozen=True)
class Cell:
    id: int
    vertices: tuple[int, ...]
    faces: tuple[int, ...]
    h: float
    center: np.ndarray          # M_T
    simplices: np.ndarray       # w(T) as coordinates (ns, d+1, d)


def _csr(lists):
    ptr = np.zeros(len(lists) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(x) for x in lists])
    idx = np.fromiter(itertools.chain.from_iterable(lists), dtype=np.int64, count=ptr[-1])
    return ptr, idx


@dataclass(eq=False)
class PolytopalMesh:
    dim: int
    vertices: np.ndarray
    cells: list                          # vertex id tuples
    cell_face_loops: list | None         # 3D only: per cell, list of face loops
    faces: list                          # proper face vertex tuples
    cell_faces: list                     # per cell, proper face ids
    face_cells: np.ndarray               # (nf, 2), -1 if absent
    face_marker: np.ndarray              # Marker values
    h_cell: np.ndarray
    h_face: np.ndarray
    volume: np.ndarray
    centroid: np.ndarray
    center: np.ndarray                   # M_T
    points: np.ndarray                   # vertices followed by the M_T
    sub_ptr: np.ndarray                  # CSR cell -> sub-simplices
    sub_cells: np.ndarray                # (nsub, d+1) indices into ``points``
    skel_faces: np.ndarray               # (nsk, d) sorted vertex ids (E_h*)
    skel_parent: np.ndarray              # proper face owning each skeleton face
    cskel_ptr: np.ndarray                # CSR cell -> boundary skeleton faces
    cskel_idx: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    # -- sizes --------------------------------------------------------------
    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_skel(self):
        return len(self.skel_faces)

    @property
    def h(self):
        return float(self.h_cell.max())

    # -- views --------------------------------------------------------------
    def cell(self, c) -> Cell:
        return Cell(c, tuple(self.cells[c]), tuple(self.cell_faces[c]), float(self.h_cell[c]),
                    self.center[c], self.cell_simplices(c))

    def face(self, f) -> ProperFace:
        cells = tuple(int(c) for c in self.face_cells[f] if c >= 0)
        return ProperFace(f, tuple(self.faces[f]), float(self.h_face[f]),
                          Marker(int(self.face_marker[f])), cells)

    def cell_simplices(self, c):
        return self.points[self.sub_cells[self.sub_ptr[c]:self.sub_ptr[c + 1]]]

    def cell_skeleton(self, c):
        return self.cskel_idx[self.cskel_ptr[c]:self.cskel_ptr[c + 1]]

    def skel_coords(self, s):
        return self.vertices[self.skel_faces[s]]

    @property
    def skel_h(self):
        """h_E of the proper face containing each skeleton face."""
        return self.h_face[self.skel_parent]

    @property
    def skel_marker(self):
        return self.face_marker[self.skel_parent]

    def outward_normals(self, c):
        """Unit outward normals of the boundary skeleton faces of cell ``c``."""
        s = self.cell_skeleton(c)
        return face_normals(self.vertices[self.skel_faces[s]], self.center[c])

    def boundary_faces(self, marker=None):
        mask = self.face_marker != Marker.INTERIOR
        if marker is not None:
            mask = self.face_marker == marker
        return np.flatnonzero(mask)


def face_normals(coords, inside):
    """Unit normals of faces ``coords (..., d, d)`` pointing away from ``inside``."""
    coords = np.asarray(coords, dtype=float)
    d = coords.shape[-1]
    if d == 2:
        t = coords[..., 1, :] - coords[..., 0, :]
        n = np.stack([t[..., 1], -t[..., 0]], axis=-1)
    else:
        n = np.cross(coords[..., 1, :] - coords[..., 0, :], coords[..., 2, :] - coords[..., 0, :])
    n = n / np.linalg.norm(n, axis=-1, keepdims=True)
    mid = coords.mean(axis=-2)
    sign = np.sign(np.einsum("...d,...d->...", mid - inside, n))
    return n * np.where(sign == 0, 1.0, sign)[..., None]


def _diameter(pts):
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


def _min_enclosing_diameter(pts):
    """Smallest enclosing ball diameter of a small planar point set (in 3D)."""
    pts = np.asarray(pts, dtype=float)
    best = np.inf
    tol = 1e-12 * _diameter(pts)
    for i, j in itertools.combinations(range(len(pts)), 2):
        c = 0.5 * (pts[i] + pts[j])
        r = 0.5 * np.linalg.norm(pts[i] - pts[j])
        if np.all(np.linalg.norm(pts - c, axis=1) <= r + tol):
            best = min(best, 2 * r)
    for i, j, k in itertools.combinations(range(len(pts)), 3):
        a, b, cpt = pts[i], pts[j], pts[k]
        ab, ac = b - a, cpt - a
        n = np.cross(ab, ac)
        nn = np.dot(n, n)
        if nn < tol ** 2:
            continue
        cc = a + (np.dot(ac, ac) * np.cross(n, ab) + np.dot(ab, ab) * np.cross(ac, n)) / (2 * nn)
        r = np.linalg.norm(cc - a)
        if np.all(np.linalg.norm(pts - cc, axis=1) <= r + tol):
            best = min(best, 2 * r)
    return float(best)


def _triangle_enclosing_diameter(tri):
    """Smallest enclosing circle diameter of triangles ``(n, 3, d)``."""
    e = np.stack([np.linalg.norm(tri[:, (i + 1) % 3] - tri[:, (i + 2) % 3], axis=1)
                  for i in range(3)], axis=1)
    e.sort(axis=1)
    a, b, c = e.T
    obtuse = a * a + b * b <= c * c * (1 + 1e-12)
    s = 0.5 * (a + b + c)
    area = np.sqrt(np.maximum(s * (s - a) * (s - b) * (s - c), 0.0))
    circ = np.divide(a * b * c, 2 * area, out=c.copy(), where=area > 0)
    return np.where(obtuse, c, circ)


def _polygon_area_centroid(p):
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    cx = ((x + xn) * cross).sum() / (6 * area)
    cy = ((y + yn) * cross).sum() / (6 * area)
    return area, np.array([cx, cy])


def _is_convex(halfspaces, pts, tol):
    # every vertex on the inner side of every supporting hyperplane
    a, b = halfspaces
    return bool(np.all(pts @ a.T - b <= tol))


def _chebyshev_center(a, b):
    """Centre of the largest ball inside {x : a x <= b}."""
    norms = np.linalg.norm(a, axis=1)
    d = a.shape[1]
    res = optimize.linprog(np.r_[np.zeros(d), -1.0], A_ub=np.c_[a, norms], b_ub=b,
                           bounds=[(None, None)] * d + [(0, None)], method="highs")
    if not res.success or res.x[-1] <= 0:
        raise NonStarShaped("star kernel is empty")
    return res.x[:d]


def _orient_loops(loops):
    """Make face loops of a closed polyhedral surface consistently oriented."""
    loops = [list(l) for l in loops]
    edge_faces = defaultdict(list)
    for fi, loop in enumerate(loops):
        for a, b in zip(loop, loop[1:] + loop[:1]):
            edge_faces[frozenset((a, b))].append(fi)
    done = {0}
    stack = [0]
    while stack:
        fi = stack.pop()
        loop = loops[fi]
        directed = set(zip(loop, loop[1:] + loop[:1]))
        for a, b in directed:
            for fj in edge_faces[frozenset((a, b))]:
                if fj in done:
                    continue
                other = loops[fj]
                if (a, b) in set(zip(other, other[1:] + other[:1])):
                    loops[fj] = other[::-1]
                done.add(fj)
                stack.append(fj)
    if len(done) != len(loops):
        raise TopologyError("cell surface is not connected")
    return loops


def _signed_volume(points, loops):
    vol = 0.0
    for loop in loops:
        a = points[loop[0]]
        for j in range(1, len(loop) - 1):
            vol += np.dot(a, np.cross(points[loop[j]], points[loop[j + 1]])) / 6.0
    return vol


def build_mesh(vertices, cells, face_loops=None, markers=None, default_marker=Marker.DIRICHLET):
    """Assemble a :class:`PolytopalMesh`.

    Parameters
    ----------
    vertices : (nv, d) array
    cells : sequence of vertex id sequences
        2D: boundary loop of each cell (hanging nodes included).  3D: the
        vertex ids of each cell (used for h_T and M2 checks).
    face_loops : list of list of loops, 3D only
        Face vertex loops of every cell.
    markers : dict or callable, optional
        Boundary markers.  A dict maps ``frozenset(face vertices)`` to a
        :class:`Marker`; a callable receives the face midpoint and returns
        one.  Faces not covered get ``default_marker`` (``None`` makes that
        an error).
    """
    vertices = np.asarray(vertices, dtype=float)
    nv, d = vertices.shape
    if d not in (2, 3):
        raise TopologyError(f"dimension {d} not supported")
    if not np.all(np.isfinite(vertices)):
        raise TopologyError("non-finite vertex coordinates")
    cells = [tuple(int(v) for v in c) for c in cells]
    for ci, c in enumerate(cells):
        if min(c) < 0 or max(c) >= nv:
            raise TopologyError(f"cell {ci} references a missing vertex")
    generated = d == 3 and face_loops is None
    if generated:
        face_loops = [_tet_faces(c, vertices) if len(c) == 4 else None for c in cells]
        if any(fl is None for fl in face_loops):
            raise TopologyError("3D non-tetrahedral cells need explicit face loops")

    # -- proper faces ---------------------------------------------------------
    face_index = {}
    faces, cell_faces, incident = [], [], []
    oriented_loops = []
    for ci, c in enumerate(cells):
        if d == 2:
            area = _polygon_area_centroid(vertices[list(c)])[0]
            if area < 0:
                c = c[::-1]
                cells[ci] = c
            loops = [(c[j], c[(j + 1) % len(c)]) for j in range(len(c))]
        else:
            loops = [tuple(int(v) for v in l) for l in face_loops[ci]]
            for l in loops:
                if min(l) < 0 or max(l) >= nv:
                    raise TopologyError(f"cell {ci} references a missing vertex")
            if not generated:
                # generated tet loops are already outward oriented
                loops = _orient_loops(loops)
                if _signed_volume(vertices, loops) < 0:
                    loops = [l[::-1] for l in loops]
            oriented_loops.append(loops)
        fids = []
        for loop in loops:
            key = frozenset(loop)
            fid = face_index.get(key)
            if fid is None:
                fid = len(faces)
                face_index[key] = fid
                j = int(np.argmin(loop))
                faces.append(tuple(sorted(loop)) if d == 2 else tuple(loop[j:]) + tuple(loop[:j]))
                incident.append([])
            incident[fid].append(ci)
            fids.append(fid)
        cell_faces.append(tuple(fids))
    nf = len(faces)
    face_cells = -np.ones((nf, 2), dtype=np.int64)
    for fid, inc in enumerate(incident):
        if len(inc) > 2:
            raise TopologyError(f"face {faces[fid]} shared by {len(inc)} cells")
        face_cells[fid, :len(inc)] = inc

    face_marker = np.zeros(nf, dtype=np.int8)
    for fid in np.flatnonzero(face_cells[:, 1] < 0):
        key = frozenset(faces[fid])
        m = None
        if callable(markers):
            m = markers(vertices[list(faces[fid])].mean(axis=0))
        elif markers is not None:
            m = markers.get(key)
        if m is None:
            m = default_marker
        if m is None:
            raise TopologyError(f"boundary face {faces[fid]} has no D/N marker")
        m = Marker(m)
        if m == Marker.INTERIOR:
            raise TopologyError(f"boundary face {faces[fid]} marked interior")
        face_marker[fid] = m
    if isinstance(markers, dict):
        for key in markers:
            fid = face_index.get(frozenset(key))
            if fid is None or face_cells[fid, 1] >= 0:
                raise TopologyError(f"marker given for non-boundary face {sorted(key)}")

    # -- sizes ---------------------------------------------------------------
    h_cell = np.array([_diameter(vertices[list(c)]) for c in cells])
    if d == 2:
        fv = np.asarray(faces)
        h_face = np.linalg.norm(vertices[fv[:, 1]] - vertices[fv[:, 0]], axis=1)
    elif all(len(f) == 3 for f in faces):
        h_face = _triangle_enclosing_diameter(vertices[np.asarray(faces)])
    else:
        h_face = np.array([_min_enclosing_diameter(vertices[list(f)]) for f in faces])

    # -- star centres and submesh -----------------------------------------------
    nc = len(cells)
    centers = np.empty((nc, d))
    centroids = np.empty((nc, d))
    volumes = np.empty(nc)
    sub_lists, skel_lists = [], []
    skel_index = {}
    skel_faces, skel_parent = [], []

    def skel_id(verts, parent):
        key = tuple(sorted(verts))
        sid = skel_index.get(key)
        if sid is None:
            sid = len(skel_faces)
            skel_index[key] = sid
            skel_faces.append(key)
            skel_parent.append(parent)
        return sid

    for ci, c in enumerate(cells):
        pts = vertices[list(c)]
        tol = 1e-12 * h_cell[ci]
        if d == 2:
            loops = [(c[j], c[(j + 1) % len(c)]) for j in range(len(c))]
        else:
            loops = oriented_loops[ci]
        if len(c) == d + 1 and len(loops) == d + 1:
            m_t = pts.mean(axis=0)          # simplex: centroid, always convex
        else:
            a, b = _halfspaces(vertices, loops, d)
            if _is_convex((a, b), pts, tol):
                m_t = _cell_centroid(vertices, c, loops, d)
            else:
                m_t = _chebyshev_center(a, b)
        centers[ci] = m_t
        mt_index = nv + ci
        simplices, skel = [], []
        if d == 2:
            for (p, q), fid in zip(loops, cell_faces[ci]):
                skel.append(skel_id((p, q), fid))
                simplices.append((mt_index, p, q))
            if len(c) == 3:
                simplices = [tuple(c)]
        else:
            simplex_cell = len(c) == 4 and all(len(l) == 3 for l in loops)
            for loop, fid in zip(loops, cell_faces[ci]):
                j = int(np.argmin(loop))
                loop = list(loop[j:]) + list(loop[:j])
                for t in range(1, len(loop) - 1):
                    tri = (loop[0], loop[t], loop[t + 1])
                    skel.append(skel_id(tri, fid))
                    # outward (a, b, c): tet (a, c, b, M) is positively oriented
                    simplices.append((tri[0], tri[2], tri[1], mt_index))
            if simplex_cell:
                simplices = [_positive_tet(c, vertices)]
        sub_lists.append(simplices)
        skel_lists.append(skel)

    points = np.vstack([vertices, centers])
    sub_ptr, _ = _csr([range(len(x)) for x in sub_lists])
    sub_cells = np.asarray([s for x in sub_lists for s in x], dtype=np.int64).reshape(-1, d + 1)
    sub_coords = points[sub_cells]
    signed = _signed_measure(sub_coords)
    for ci in range(nc):
        s = signed[sub_ptr[ci]:sub_ptr[ci + 1]]
        scale = h_cell[ci] ** d
        if np.any(s <= 1e-14 * scale):
            raise NonStarShaped(f"cell {ci}: sub-simplex of w(T) inverted or degenerate")
    sub_vol = np.abs(signed)
    for ci in range(nc):
        sl = slice(sub_ptr[ci], sub_ptr[ci + 1])
        volumes[ci] = sub_vol[sl].sum()
        bary = sub_coords[sl].mean(axis=1)
        centroids[ci] = (sub_vol[sl, None] * bary).sum(axis=0) / volumes[ci]

    cskel_ptr, cskel_idx = _csr(skel_lists)
    return PolytopalMesh(
        dim=d, vertices=vertices, cells=cells,
        cell_face_loops=oriented_loops if d == 3 else None,
        faces=faces, cell_faces=cell_faces, face_cells=face_cells, face_marker=face_marker,
        h_cell=h_cell, h_face=h_face, volume=volumes, centroid=centroids, center=centers,
        points=points, sub_ptr=sub_ptr, sub_cells=sub_cells,
        skel_faces=np.asarray(skel_faces, dtype=np.int64).reshape(-1, d),
        skel_parent=np.asarray(skel_parent, dtype=np.int64),
        cskel_ptr=cskel_ptr, cskel_idx=cskel_idx,
    )


def build_submesh(mesh):
    """Return the sub-simplices w(T) of every cell as coordinate arrays.

    The submesh is built once by :func:`build_mesh`; this accessor exposes it
    per cell.
    """
    return [mesh.cell_simplices(c) for c in range(mesh.n_cells)]


def _signed_measure(coords):
    edges = coords[:, 1:, :] - coords[:, :1, :]
    d = coords.shape[-1]
    return np.linalg.det(edges) / (2.0 if d == 2 else 6.0)


def _positive_tet(c, vertices):
    c = list(c)
    e = vertices[c[1:]] - vertices[c[0]]
    if np.linalg.det(e) < 0:
        c[1], c[2] = c[2], c[1]
    return tuple(c)


def _tet_faces(c, vertices):
    a, b, cc, dd = _positive_tet(c, vertices)
    return [(b, cc, dd), (a, dd, cc), (a, b, dd), (a, cc, b)]


def _halfspaces(vertices, loops, d):
    """Supporting half-spaces ``a x <= b`` of the cell faces (outward normals)."""
    rows, rhs = [], []
    for loop in loops:
        p = vertices[list(loop)]
        if d == 2:
            t = p[1] - p[0]
            n = np.array([t[1], -t[0]])
        else:
            n = np.zeros(3)
            for j in range(1, len(p) - 1):
                n += np.cross(p[j] - p[0], p[j + 1] - p[0])
        n = n / np.linalg.norm(n)
        rows.append(n)
        rhs.append(np.dot(n, p[0]))
    return np.asarray(rows), np.asarray(rhs)


def _cell_centroid(vertices, c, loops, d):
    if d == 2:
        return _polygon_area_centroid(vertices[list(c)])[1]
    vol, acc = 0.0, np.zeros(3)
    origin = vertices[list(c)].mean(axis=0)
    for loop in loops:
        a = vertices[loop[0]]
        for j in range(1, len(loop) - 1):
            b, cc = vertices[loop[j]], vertices[loop[j + 1]]
            v = np.dot(a - origin, np.cross(b - origin, cc - origin)) / 6.0
            vol += v
            acc += v * (origin + a + b + cc) / 4.0
    return acc / vol


def cell_loops(mesh, c):
    """Outward-oriented boundary loops of cell ``c`` (edges in 2D)."""
    if mesh.dim == 2:
        v = mesh.cells[c]
        return [(v[j], v[(j + 1) % len(v)]) for j in range(len(v))]
    return mesh.cell_face_loops[c]


def cell_volume_direct(mesh, c):
    """Cell volume from the boundary (shoelace / divergence theorem)."""
    if mesh.dim == 2:
        return abs(_polygon_area_centroid(mesh.vertices[list(mesh.cells[c])])[0])
    return abs(_signed_volume(mesh.vertices, mesh.cell_face_loops[c]))


def with_markers(mesh, neumann=None):
    """Copy of ``mesh`` with boundary faces re-marked.

    ``neumann`` is a predicate on face midpoints; matching faces become
    Neumann, the rest Dirichlet.
    """
    def markers(mid):
        return Marker.NEUMANN if neumann(mid) else Marker.DIRICHLET

    return build_mesh(mesh.vertices, mesh.cells, mesh.cell_face_loops,
                      markers=None if neumann is None else markers)


def skeleton_measure(mesh, s=None):
    coords = mesh.vertices[mesh.skel_faces if s is None else mesh.skel_faces[s]]
    return simplex_measure(coords)
