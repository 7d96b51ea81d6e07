"""SVG density maps: one filled polygon per element."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from vemtopo.mesh.core import PolygonalMesh


def gray_value(rho: float) -> int:
    """Fill level 255 (1 - rho): solid black, void white."""
    return int(round(255.0 * (1.0 - min(max(float(rho), 0.0), 1.0))))


def svg_string(mesh: PolygonalMesh, density) -> str:
    rho = np.asarray(density, dtype=float).ravel()
    if rho.size != mesh.n_elements:
        raise ValueError(f"density has {rho.size} entries for {mesh.n_elements} cells")
    x0, y0 = mesh.vertices.min(axis=0)
    x1, y1 = mesh.vertices.max(axis=0)
    w, h = x1 - x0, y1 - y0
    # the y axis is flipped so that the picture is upright
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'viewBox="{x0:.17g} {-y1:.17g} {w:.17g} {h:.17g}">')
    lines = [head, '<g transform="scale(1,-1)" stroke="none">']
    for poly, r in zip(mesh.polygons, rho):
        g = gray_value(r)
        pts = " ".join(f"{x:.17g},{y:.17g}" for x, y in mesh.vertices[poly])
        lines.append(f'<polygon points="{pts}" fill="rgb({g},{g},{g})"/>')
    lines += ["</g>", "</svg>"]
    return "\n".join(lines) + "\n"


def write_svg_density(mesh: PolygonalMesh, density, path) -> None:
    Path(path).write_text(svg_string(mesh, density))
