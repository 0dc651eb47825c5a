"""Structured mesh families on the unit square and unit cube."""

from __future__ import annotations

import itertools

import numpy as np

from .core import Marker, build_mesh


def generate_triangle_mesh(n, markers=None):
    """``n x n`` squares, each cut by its lower-left to upper-right diagonal."""
    if n < 1:
        raise ValueError("n must be >= 1")
    t = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(t, t)
    vertices = np.c_[xx.ravel(), yy.ravel()]

    def vid(i, j):
        return j * (n + 1) + i

    cells = []
    for j in range(n):
        for i in range(n):
            ll, lr, ur, ul = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            cells.append((ll, lr, ur))
            cells.append((ll, ur, ul))
    return build_mesh(vertices, cells, markers=markers)


def generate_ladder_mesh(n, markers=None):
    """Rectangles in ``n`` rows; odd rows are shifted by half a cell.

    Every interior horizontal line carries the vertices of both adjacent
    rows, so cell sides are split by hanging nodes (brick pattern).  Odd rows
    start and end with half-width cells.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    # integer grid: x in units of 1/(2n), y in units of 1/n
    def breaks(row):
        if row % 2 == 0:
            return list(range(0, 2 * n + 1, 2))
        return [0] + list(range(1, 2 * n, 2)) + [2 * n]

    line_pts = []
    for line in range(n + 1):
        pts = set()
        if line > 0:
            pts.update(breaks(line - 1))
        if line < n:
            pts.update(breaks(line))
        line_pts.append(sorted(pts))
    index = {}
    vertices = []
    for line, pts in enumerate(line_pts):
        for x in pts:
            index[(x, line)] = len(vertices)
            vertices.append((x / (2 * n), line / n))
    cells = []
    for row in range(n):
        b = breaks(row)
        for xa, xb in zip(b[:-1], b[1:]):
            bottom = [index[(x, row)] for x in line_pts[row] if xa <= x <= xb]
            top = [index[(x, row + 1)] for x in line_pts[row + 1] if xa <= x <= xb]
            cells.append(tuple(bottom + top[::-1]))
    return build_mesh(np.asarray(vertices), cells, markers=markers)


def generate_cube_tet_mesh(n, markers=None):
    """``n^3`` subcubes, each split into 6 tetrahedra around its main diagonal."""
    if n < 1:
        raise ValueError("n must be >= 1")
    t = np.linspace(0.0, 1.0, n + 1)
    zz, yy, xx = np.meshgrid(t, t, t, indexing="ij")
    vertices = np.c_[xx.ravel(), yy.ravel(), zz.ravel()]

    def vid(i, j, k):
        return (k * (n + 1) + j) * (n + 1) + i

    cells = []
    for k, j, i in itertools.product(range(n), repeat=3):
        for perm in itertools.permutations(range(3)):
            corner = [0, 0, 0]
            path = [vid(i, j, k)]
            for axis in perm:
                corner[axis] += 1
                path.append(vid(i + corner[0], j + corner[1], k + corner[2]))
            cells.append(tuple(path))
    return build_mesh(vertices, cells, markers=markers)


GENERATORS = {
    "triangle": generate_triangle_mesh,
    "ladder": generate_ladder_mesh,
    "cube": generate_cube_tet_mesh,
}


def all_dirichlet(_mid):
    return Marker.DIRICHLET
