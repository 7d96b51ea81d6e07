"""Polygonal mesh container and per-element geometry."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from vemtopo.errors import GeometryError
from vemtopo.mesh.domains import Domain

logger = logging.getLogger(__name__)

#: Regularity constants for the mesh-quality check (star-shaped ball radius and
#: minimum edge length, both relative to the element diameter).
C_S = 0.05
C_S_EDGE = 0.05


@dataclass
class ElementGeometry:
    vertices: np.ndarray  # (n, 2), counter-clockwise
    area: float
    centroid: np.ndarray
    diameter: float
    edge_lengths: np.ndarray  # edge i joins vertex i to vertex i+1
    normals: np.ndarray  # outward unit normals, (n, 2)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def size(self) -> float:
        """Square root of the area (the element's contribution to d_m)."""
        return math.sqrt(self.area)


def polygon_area(xy: np.ndarray) -> float:
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_centroid(xy: np.ndarray) -> np.ndarray:
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    a = 0.5 * cr.sum()
    if a == 0.0:
        raise GeometryError("zero-area polygon has no centroid")
    return np.array([np.sum((x + xn) * cr), np.sum((y + yn) * cr)]) / (6.0 * a)


def polygon_geometry(xy: np.ndarray) -> ElementGeometry:
    xy = np.asarray(xy, dtype=float)
    if len(xy) < 3:
        raise GeometryError(f"polygon with {len(xy)} vertices")
    area = polygon_area(xy)
    diam = float(np.max(np.linalg.norm(xy[:, None, :] - xy[None, :, :], axis=2)))
    if not area > 1e-14 * diam**2:
        raise GeometryError(f"degenerate polygon (signed area {area:.3e})")
    t = np.roll(xy, -1, axis=0) - xy
    lengths = np.linalg.norm(t, axis=1)
    if np.any(lengths == 0.0):
        raise GeometryError("polygon has a zero-length edge")
    normals = np.column_stack([t[:, 1], -t[:, 0]]) / lengths[:, None]
    return ElementGeometry(xy, area, polygon_centroid(xy), diam, lengths, normals)


@dataclass
class PolygonalMesh:
    """Vertices, CCW polygons and tagged boundary edges.

    ``boundary_edges`` rows are ``(polygon, local_edge, tag)``; local edge ``k``
    of a polygon joins its vertices ``k`` and ``k+1``. Tags index
    ``boundary_names``.
    """

    vertices: np.ndarray
    polygons: list
    boundary_edges: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=int))
    domain: Domain | None = None
    boundary_names: list = field(default_factory=list)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.polygons = [np.asarray(p, dtype=np.int64) for p in self.polygons]
        self.boundary_edges = np.asarray(self.boundary_edges, dtype=np.int64).reshape(-1, 3)
        if not self.boundary_names and self.domain is not None:
            self.boundary_names = list(self.domain.boundary_names)

    @property
    def n_elements(self) -> int:
        return len(self.polygons)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def element_vertices(self, e: int) -> np.ndarray:
        return self.vertices[self.polygons[e]]

    @cached_property
    def areas(self) -> np.ndarray:
        return np.array([polygon_area(self.element_vertices(e)) for e in range(self.n_elements)])

    @cached_property
    def centroids(self) -> np.ndarray:
        return np.array([polygon_centroid(self.element_vertices(e)) for e in range(self.n_elements)])

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    @property
    def mean_size(self) -> float:
        """d_m: square root of the mean element area."""
        return math.sqrt(self.total_area / self.n_elements)

    @cached_property
    def edges(self) -> dict:
        """Map sorted vertex pair -> list of (polygon, local edge)."""
        out: dict = {}
        for e, poly in enumerate(self.polygons):
            n = len(poly)
            for k in range(n):
                a, b = int(poly[k]), int(poly[(k + 1) % n])
                out.setdefault((min(a, b), max(a, b)), []).append((e, k))
        return out

    @cached_property
    def adjacency(self) -> np.ndarray:
        """(m, 2) pairs of edge-adjacent elements."""
        pairs = [(v[0][0], v[1][0]) for v in self.edges.values() if len(v) == 2]
        return np.array(pairs, dtype=np.int64).reshape(-1, 2)

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        vs = set()
        for e, k, _ in self.boundary_edges:
            poly = self.polygons[e]
            vs.add(int(poly[k]))
            vs.add(int(poly[(k + 1) % len(poly)]))
        return np.array(sorted(vs), dtype=np.int64)

    def vertices_on_tag(self, tag) -> np.ndarray:
        if isinstance(tag, str):
            tag = self.boundary_names.index(tag)
        vs = set()
        for e, k, t in self.boundary_edges:
            if t == tag:
                poly = self.polygons[e]
                vs.add(int(poly[k]))
                vs.add(int(poly[(k + 1) % len(poly)]))
        return np.array(sorted(vs), dtype=np.int64)

    def nearest_vertex(self, point, candidates=None) -> int:
        pts = self.vertices if candidates is None else self.vertices[candidates]
        i = int(np.argmin(np.linalg.norm(pts - np.asarray(point, dtype=float), axis=1)))
        return i if candidates is None else int(candidates[i])

    @cached_property
    def _centroid_tree(self):
        return cKDTree(self.centroids)

    def locate(self, points) -> np.ndarray:
        """Element index for each point (nearest centroid, exact for Voronoi cells)."""
        _, idx = self._centroid_tree.query(np.atleast_2d(points))
        return idx


def element_geometry(mesh: PolygonalMesh, e_index: int) -> ElementGeometry:
    if not 0 <= e_index < mesh.n_elements:
        raise IndexError(f"element {e_index} out of range")
    return polygon_geometry(mesh.element_vertices(e_index))


@dataclass
class RegularityReport:
    min_edge_ratio: float
    min_ball_ratio: float
    bad_elements: list

    @property
    def ok(self) -> bool:
        return not self.bad_elements


def check_regularity(mesh: PolygonalMesh, c_s: float = C_S, c_s_edge: float = C_S_EDGE,
                     warn: bool = True) -> RegularityReport:
    """Check star-shapedness w.r.t. a centroid ball and edge lengths against h_E.

    The ball radius is taken as the distance from the centroid to the nearest
    edge line, which is a valid star-shapedness radius for convex cells.
    """
    min_edge, min_ball, bad = np.inf, np.inf, []
    for e in range(mesh.n_elements):
        g = element_geometry(mesh, e)
        edge_ratio = g.edge_lengths.min() / g.diameter
        dist = np.einsum("ij,ij->i", g.centroid[None, :] - g.vertices, -g.normals)
        ball_ratio = dist.min() / g.diameter
        min_edge, min_ball = min(min_edge, edge_ratio), min(min_ball, ball_ratio)
        if edge_ratio < c_s_edge or ball_ratio < c_s:
            bad.append(e)
    report = RegularityReport(float(min_edge), float(min_ball), bad)
    if warn and bad:
        logger.warning("%d elements violate the regularity constants (c_s=%g, c_s'=%g)",
                       len(bad), c_s, c_s_edge)
    return report


def check_mesh(mesh: PolygonalMesh) -> None:
    """Raise GeometryError on non-positive areas or non-manifold edges."""
    if np.any(mesh.areas <= 0):
        bad = np.flatnonzero(mesh.areas <= 0)
        raise GeometryError(f"non-positive area in elements {bad[:10].tolist()}")
    for key, owners in mesh.edges.items():
        if len(owners) > 2:
            raise GeometryError(f"edge {key} shared by {len(owners)} polygons")
        if len(owners) == 2:
            (e1, k1), (e2, k2) = owners
            p1, p2 = mesh.polygons[e1], mesh.polygons[e2]
            if p1[k1] == p2[k2]:
                raise GeometryError(f"edge {key} has the same orientation in both polygons")


def centroid_distance_table(mesh: PolygonalMesh, r_min: float):
    """Pairs of elements whose centroids are closer than ``r_min``.

    Returns ``(rows, cols, dists)``; symmetric and including the diagonal.
    """
    if r_min <= 0:
        raise ValueError("r_min must be positive")
    tree = mesh._centroid_tree
    pairs = tree.query_pairs(r_min, output_type="ndarray")
    c = mesh.centroids
    d = np.linalg.norm(c[pairs[:, 0]] - c[pairs[:, 1]], axis=1) if len(pairs) else np.zeros(0)
    keep = d < r_min
    pairs, d = pairs[keep], d[keep]
    n = mesh.n_elements
    diag = np.arange(n)
    rows = np.concatenate([diag, pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([diag, pairs[:, 1], pairs[:, 0]])
    dists = np.concatenate([np.zeros(n), d, d])
    order = np.lexsort((cols, rows))
    return rows[order], cols[order], dists[order]


def rotate_mesh(mesh: PolygonalMesh, angle: float, center=None) -> PolygonalMesh:
    from vemtopo.mesh.domains import RotatedDomain

    if center is None:
        center = mesh.centroids.T @ mesh.areas / mesh.total_area
    center = np.asarray(center, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    verts = mesh.vertices.copy() if angle == 0 else (mesh.vertices - center) @ rot.T + center
    dom = None
    if mesh.domain is not None:
        dom = mesh.domain if angle == 0 else RotatedDomain(base=mesh.domain, angle=angle,
                                                           center=tuple(center))
    return PolygonalMesh(verts, [p.copy() for p in mesh.polygons], mesh.boundary_edges.copy(),
                         dom, list(mesh.boundary_names))
