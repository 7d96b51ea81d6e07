"""Plain-text mesh format.

::

    #vertices N
    x y            (N lines, %.17g)
    #polygons M
    k i1 ... ik    (M lines, 0-based, CCW)
    #boundary B
    poly edge tag  (B lines)
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from vemtopo.errors import GeometryError
from vemtopo.mesh.core import PolygonalMesh


def write_mesh(mesh: PolygonalMesh, path) -> None:
    lines = [f"#vertices {mesh.n_vertices}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines.append(f"#polygons {mesh.n_elements}")
    lines += [" ".join([str(len(p))] + [str(int(i)) for i in p]) for p in mesh.polygons]
    lines.append(f"#boundary {len(mesh.boundary_edges)}")
    lines += [f"{e} {k} {t}" for e, k, t in mesh.boundary_edges]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path, domain=None) -> PolygonalMesh:
    rows = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    pos = 0

    def header(name):
        nonlocal pos
        parts = rows[pos].split()
        if parts[0] != f"#{name}":
            raise GeometryError(f"expected #{name} at line {pos + 1}, found {rows[pos]!r}")
        pos += 1
        return int(parts[1])

    nv = header("vertices")
    verts = np.array([[float(v) for v in rows[pos + i].split()] for i in range(nv)]).reshape(-1, 2)
    pos += nv
    npoly = header("polygons")
    polys = []
    for i in range(npoly):
        vals = [int(v) for v in rows[pos + i].split()]
        if vals[0] != len(vals) - 1:
            raise GeometryError(f"polygon {i}: count {vals[0]} does not match indices")
        polys.append(vals[1:])
    pos += npoly
    nb = header("boundary")
    bedges = np.array([[int(v) for v in rows[pos + i].split()] for i in range(nb)],
                      dtype=np.int64).reshape(-1, 3)
    return PolygonalMesh(verts, polys, bedges, domain)
