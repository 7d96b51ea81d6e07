"""Legacy ASCII VTK unstructured grids with polygon cells."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from vemtopo.errors import VemTopoError
from vemtopo.mesh.core import PolygonalMesh

VTK_POLYGON = 7


def _num(v: float) -> str:
    return f"{float(v):.17g}"


def vtk_string(mesh: PolygonalMesh, density=None, point_vectors: dict | None = None,
               title: str = "vemtopo") -> str:
    """Serialize a mesh with optional cell density and point vector fields.

    ``point_vectors`` maps a field name (``displacement`` or ``velocity``) to a
    ``(n_vertices, 2)`` array; the third component is written as zero.
    """
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {mesh.n_vertices} double")
    lines += [f"{_num(x)} {_num(y)} 0" for x, y in mesh.vertices]
    size = sum(len(p) + 1 for p in mesh.polygons)
    lines.append(f"CELLS {mesh.n_elements} {size}")
    lines += [" ".join([str(len(p))] + [str(int(i)) for i in p]) for p in mesh.polygons]
    lines.append(f"CELL_TYPES {mesh.n_elements}")
    lines += [str(VTK_POLYGON)] * mesh.n_elements
    if density is not None:
        rho = np.asarray(density, dtype=float).ravel()
        if rho.size != mesh.n_elements:
            raise ValueError(f"density has {rho.size} entries for {mesh.n_elements} cells")
        lines += [f"CELL_DATA {mesh.n_elements}", "SCALARS density double 1", "LOOKUP_TABLE default"]
        lines += [_num(r) for r in rho]
    if point_vectors:
        lines.append(f"POINT_DATA {mesh.n_vertices}")
        for name, vec in point_vectors.items():
            vec = np.asarray(vec, dtype=float).reshape(mesh.n_vertices, 2)
            lines.append(f"VECTORS {name} double")
            lines += [f"{_num(a)} {_num(b)} 0" for a, b in vec]
    return "\n".join(lines) + "\n"


def write_vtk(mesh: PolygonalMesh, path, density=None, point_vectors: dict | None = None) -> None:
    Path(path).write_text(vtk_string(mesh, density, point_vectors))


def read_vtk(path) -> dict:
    """Parse files written by :func:`write_vtk`.

    Returns ``points`` (n, 2), ``polygons`` (list of index lists),
    ``cell_data`` and ``point_data`` (name to array).
    """
    tokens = Path(path).read_text().split("\n")
    rows = [t.strip() for t in tokens[4:] if t.strip()]
    out = {"points": None, "polygons": [], "cell_data": {}, "point_data": {}}
    i = 0
    section = None
    while i < len(rows):
        head = rows[i].split()
        key = head[0]
        if key == "POINTS":
            n = int(head[1])
            pts = np.array([[float(v) for v in rows[i + 1 + k].split()] for k in range(n)])
            out["points"] = pts.reshape(n, 3)[:, :2]
            i += n + 1
        elif key == "CELLS":
            n = int(head[1])
            for k in range(n):
                vals = [int(v) for v in rows[i + 1 + k].split()]
                out["polygons"].append(vals[1:1 + vals[0]])
            i += n + 1
        elif key == "CELL_TYPES":
            i += int(head[1]) + 1
        elif key in ("CELL_DATA", "POINT_DATA"):
            section = ("cell_data", int(head[1])) if key == "CELL_DATA" else ("point_data", int(head[1]))
            i += 1
        elif key == "SCALARS":
            name, n = head[1], section[1]
            vals = np.array([float(rows[i + 2 + k]) for k in range(n)])
            out[section[0]][name] = vals
            i += n + 2
        elif key == "VECTORS":
            name, n = head[1], section[1]
            vals = np.array([[float(v) for v in rows[i + 1 + k].split()] for k in range(n)])
            out[section[0]][name] = vals[:, :2]
            i += n + 1
        else:
            raise VemTopoError(f"unexpected VTK keyword {key!r}")
    return out
