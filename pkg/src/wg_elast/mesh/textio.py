"""Plain-text mesh format.

::

    wgmesh <d> <#vertices> <#cells> <#bfaces>
    v x y [z]
    c v0 v1 ... vm            # 2D: boundary loop; 3D: cell vertices
    f a b c ...               # 3D only: one line per face loop of the cell above
    b <face vertex ids...> <D|N>

Vertex ids are zero-based.  ``#`` starts a comment.
"""

from __future__ import annotations

import numpy as np

from ..errors import ParseError, TopologyError
from .core import Marker, _tet_faces, build_mesh


def _tokens(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split()
        if line:
            yield lineno, line


def _ints(tok, lineno):
    try:
        return [int(t) for t in tok]
    except ValueError as exc:
        raise ParseError(f"expected integer ids, got {' '.join(tok)}", lineno) from exc


def import_mesh(text):
    lines = list(_tokens(text))
    if not lines or lines[0][1][0] != "wgmesh":
        raise ParseError("missing 'wgmesh' header", lines[0][0] if lines else 1)
    lineno, head = lines[0]
    if len(head) != 5:
        raise ParseError("header must be 'wgmesh d nv nc nb'", lineno)
    d, nv, nc, nb = _ints(head[1:], lineno)
    if d not in (2, 3):
        raise ParseError(f"dimension {d} not supported", lineno)

    vertices, cells, loops, markers = [], [], [], {}
    for lineno, tok in lines[1:]:
        kind = tok[0]
        if kind == "v":
            if len(tok) != d + 1:
                raise ParseError(f"vertex needs {d} coordinates", lineno)
            try:
                vertices.append([float(t) for t in tok[1:]])
            except ValueError as exc:
                raise ParseError("bad coordinate", lineno) from exc
        elif kind == "c":
            ids = _ints(tok[1:], lineno)
            if len(ids) < d + 1:
                raise ParseError("cell needs at least d+1 vertices", lineno)
            cells.append(ids)
            loops.append([])
        elif kind == "f":
            if d != 3 or not cells:
                raise ParseError("'f' line outside a 3D cell", lineno)
            ids = _ints(tok[1:], lineno)
            if len(ids) < 3:
                raise ParseError("face loop needs at least 3 vertices", lineno)
            loops[-1].append(ids)
        elif kind == "b":
            if len(tok) < d + 2 or tok[-1] not in ("D", "N"):
                raise ParseError("boundary line must end with D or N", lineno)
            ids = _ints(tok[1:-1], lineno)
            key = frozenset(ids)
            if key in markers:
                raise ParseError("duplicate boundary marker", lineno)
            markers[key] = Marker.DIRICHLET if tok[-1] == "D" else Marker.NEUMANN
        else:
            raise ParseError(f"unknown record '{kind}'", lineno)

    if len(vertices) != nv or len(cells) != nc or len(markers) != nb:
        raise ParseError(f"header counts ({nv}, {nc}, {nb}) do not match body "
                         f"({len(vertices)}, {len(cells)}, {len(markers)})", lines[0][0])
    for ids in cells + [l for ls in loops for l in ls]:
        if min(ids) < 0 or max(ids) >= nv:
            raise TopologyError(f"dangling vertex id in {ids}")
    for key in markers:
        if min(key) < 0 or max(key) >= nv:
            raise TopologyError(f"dangling vertex id in boundary face {sorted(key)}")
    face_loops = None
    if d == 3:
        face_loops = [l if l else None for l in loops]
        for ci, (c, fl) in enumerate(zip(cells, face_loops)):
            if fl is None and len(c) != 4:
                raise TopologyError(f"cell {ci} needs face loops")
        if any(fl is None for fl in face_loops):
            verts = np.asarray(vertices)
            face_loops = [fl if fl is not None else _tet_faces(c, verts)
                          for c, fl in zip(cells, face_loops)]
    return build_mesh(np.asarray(vertices, dtype=float).reshape(nv, d), cells, face_loops,
                      markers=markers, default_marker=None)


def export_mesh(mesh):
    nb = int((mesh.face_marker != Marker.INTERIOR).sum())
    out = [f"wgmesh {mesh.dim} {mesh.n_vertices} {mesh.n_cells} {nb}"]
    for x in mesh.vertices:
        out.append("v " + " ".join(repr(float(t)) for t in x))
    for c, cell in enumerate(mesh.cells):
        out.append("c " + " ".join(str(v) for v in cell))
        if mesh.dim == 3:
            for loop in mesh.cell_face_loops[c]:
                out.append("f " + " ".join(str(v) for v in loop))
    for f in mesh.boundary_faces():
        tag = "D" if mesh.face_marker[f] == Marker.DIRICHLET else "N"
        out.append("b " + " ".join(str(v) for v in mesh.faces[f]) + " " + tag)
    return "\n".join(out) + "\n"


def read_mesh(path):
    with open(path) as fh:
        return import_mesh(fh.read())


def write_mesh(mesh, path):
    with open(path, "w") as fh:
        fh.write(export_mesh(mesh))
