"""Mesh generators.

Voronoi meshes follow the reflection construction: seeds near (or, for
straight sides, all seeds) are mirrored across each boundary component so that
the bisector of a seed and its image lies on the boundary. Lloyd iterations
move every seed to the centroid of its clipped cell.
"""
from __future__ import annotations

import logging
import math

import numpy as np
from scipy.spatial import QhullError, Voronoi, cKDTree

from vemtopo.errors import MeshGenerationError
from vemtopo.mesh.core import PolygonalMesh, check_mesh
from vemtopo.mesh.domains import Circle, Domain, Rectangle

logger = logging.getLogger(__name__)

LLOYD_ITERS = 100
REFLECT_FACTOR = 1.5
COLLAPSE_RATIO = 0.1


# ---------------------------------------------------------------------------
# ragged-array helpers


def _ragged_shoelace(xy, region_ptr):
    """Areas and centroids of many polygons stored back to back in ``xy``."""
    n_reg = len(region_ptr) - 1
    counts = np.diff(region_ptr)
    idx = np.arange(len(xy))
    owner = np.repeat(np.arange(n_reg), counts)
    nxt = idx + 1
    last = region_ptr[1:] - 1
    nxt[last] = region_ptr[:-1]
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = x[nxt], y[nxt]
    cr = x * yn - xn * y
    a = 0.5 * np.bincount(owner, cr, minlength=n_reg)
    cx = np.bincount(owner, (x + xn) * cr, minlength=n_reg) / (6.0 * a)
    cy = np.bincount(owner, (y + yn) * cr, minlength=n_reg) / (6.0 * a)
    return a, np.column_stack([cx, cy])


def _random_points(domain: Domain, n: int, rng: np.random.Generator) -> np.ndarray:
    x0, y0, x1, y1 = domain.bbox
    pts = np.zeros((0, 2))
    while len(pts) < n:
        cand = rng.uniform([x0, y0], [x1, y1], size=(2 * n + 16, 2))
        cand = cand[domain.signed_distance(cand) < 0]
        pts = np.vstack([pts, cand])
    return pts[:n]


def _reflect(seeds: np.ndarray, domain: Domain, alpha: float, band: bool = False) -> np.ndarray:
    images = []
    for comp in domain.components:
        d = comp.distance(seeds)
        if comp.exact_reflection and not band:
            # mirror images across a straight side never steal points of the domain
            sel = d < -1e-12 * alpha
        else:
            sel = (np.abs(d) < alpha) & (d < 0)
        if not np.any(sel):
            continue
        img = comp.reflect(seeds[sel])
        img = img[domain.signed_distance(img) > 1e-9 * alpha]
        images.append(img)
    return np.vstack([seeds] + images) if images else seeds


def _voronoi_cells(seeds: np.ndarray, domain: Domain, alpha: float, band: bool = False):
    """Voronoi cells of the seeds (not the images), CCW ordered, ragged."""
    pts = _reflect(seeds, domain, alpha, band)
    n = len(seeds)
    if len(pts) < 3:
        raise MeshGenerationError("too few points for a Voronoi diagram")
    try:
        vor = Voronoi(pts, qhull_options="Qbb Qc Qz")
    except QhullError as exc:  # pragma: no cover - qhull specifics
        raise MeshGenerationError(f"qhull failed: {exc}") from None
    regions = [vor.regions[j] for j in vor.point_region[:n]]
    for i, reg in enumerate(regions):
        if len(reg) < 3 or -1 in reg:
            raise MeshGenerationError(
                f"Voronoi cell of seed {i} at ({seeds[i, 0]:.6g}, {seeds[i, 1]:.6g}) is not "
                "closed by the boundary reflections"
            )
    counts = np.fromiter((len(r) for r in regions), dtype=np.int64, count=n)
    flat = np.fromiter((v for r in regions for v in r), dtype=np.int64, count=int(counts.sum()))
    ptr = np.concatenate([[0], np.cumsum(counts)])
    owner = np.repeat(np.arange(n), counts)
    rel = vor.vertices[flat] - seeds[owner]
    ang = np.arctan2(rel[:, 1], rel[:, 0])
    order = np.lexsort((ang, owner))
    return vor.vertices, flat[order], ptr


def _lloyd_step(seeds, domain, alpha, band):
    verts, flat, ptr = _voronoi_cells(seeds, domain, alpha, band)
    area, cent = _ragged_shoelace(verts[flat], ptr)
    if band:
        # band reflection is only accepted when it reproduces the clipped tessellation
        cell_pts = verts[np.unique(flat)]
        exact = all(np.all(c.distance(cell_pts) <= 1e-9 * alpha)
                    for c in domain.components if c.exact_reflection)
        if not exact or np.any(area <= 0) or np.any(domain.signed_distance(cent) > 0):
            raise MeshGenerationError("band reflection insufficient")
    return area, cent


def _lloyd(seeds, domain, iters, alpha):
    for _ in range(iters):
        try:
            area, cent = _lloyd_step(seeds, domain, alpha, band=True)
        except MeshGenerationError:
            area, cent = _lloyd_step(seeds, domain, alpha, band=False)
        if np.any(area <= 0):
            bad = int(np.flatnonzero(area <= 0)[0])
            raise MeshGenerationError(f"empty Voronoi cell for seed {bad} at {seeds[bad]}")
        seeds = cent
    return seeds


def _cells_to_mesh(verts, flat, ptr, domain, h, collapse_ratio) -> PolygonalMesh:
    used, inv = np.unique(flat, return_inverse=True)
    xy = verts[used].copy()
    polys = [inv[ptr[i]:ptr[i + 1]] for i in range(len(ptr) - 1)]
    xy, polys = _merge_close_vertices(xy, polys, 1e-8 * h)
    comps = domain.components
    dist = np.column_stack([np.abs(c.distance(xy)) for c in comps])
    xy, polys = _collapse_short_edges(xy, polys, dist, comps, collapse_ratio, 1e-7 * h)
    xy, polys = _drop_unused(xy, polys)
    return _finalize(xy, polys, domain)


def _merge_close_vertices(xy, polys, tol):
    pairs = cKDTree(xy).query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return xy, polys
    parent = np.arange(len(xy))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    root = np.array([find(i) for i in range(len(xy))])
    polys = [_dedupe_loop(root[p]) for p in polys]
    return _drop_unused(xy, polys)


def _dedupe_loop(loop):
    loop = np.asarray(loop)
    keep = loop != np.roll(loop, 1)
    if not np.any(keep):
        return loop[:1]
    return loop[keep]


def _drop_unused(xy, polys):
    used = np.unique(np.concatenate(polys))
    remap = -np.ones(len(xy), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return xy[used], [remap[p] for p in polys]


def _signed_area(xy):
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def _convex_ok(xy):
    if len(xy) < 3 or _signed_area(xy) <= 0:
        return False
    e = np.roll(xy, -1, axis=0) - xy
    cr = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
    return bool(np.all(cr > -1e-12 * np.abs(cr).max()))


def _collapse_short_edges(xy, polys, dist, comps, ratio, on_tol, passes=5):
    """Greedily merge the endpoints of edges shorter than ``ratio * h_E``."""
    if ratio <= 0:
        return xy, polys
    xy = xy.copy()
    polys = [p.copy() for p in polys]
    on_comp = dist < on_tol
    # vertices exactly on a straight boundary (or on two of them) must stay put
    for _ in range(passes):
        v2p: dict = {}
        edges: dict = {}
        for e, p in enumerate(polys):
            for k in range(len(p)):
                a, b = int(p[k]), int(p[(k + 1) % len(p)])
                v2p.setdefault(a, []).append(e)
                edges.setdefault((min(a, b), max(a, b)), []).append(e)
        bvert = set()
        for (a, b), owners in edges.items():
            if len(owners) == 1:
                bvert.update((a, b))
        diam = [np.max(np.linalg.norm(xy[p][:, None] - xy[p][None], axis=2)) for p in polys]
        cands = []
        for (a, b), owners in edges.items():
            length = np.linalg.norm(xy[a] - xy[b])
            if length < ratio * min(diam[e] for e in owners):
                cands.append((length, a, b))
        if not cands:
            break
        cands.sort()
        touched: set = set()
        changed = False
        for _, a, b in cands:
            affected = set(v2p[a]) | set(v2p[b])
            if affected & touched:
                continue
            target = _collapse_target(a, b, xy, bvert, on_comp, dist, comps)
            if target is None:
                continue
            keep, drop, pos = target
            new_loops = {}
            ok = True
            for e in affected:
                loop = _dedupe_loop(np.where(polys[e] == drop, keep, polys[e]))
                pts = xy[loop].copy()
                pts[loop == keep] = pos
                if len(loop) < 3 or not _convex_ok(pts):
                    ok = False
                    break
                new_loops[e] = loop
            if not ok:
                continue
            xy[keep] = pos
            for e, loop in new_loops.items():
                polys[e] = loop
            touched |= affected
            changed = True
        if not changed:
            break
    return xy, polys


def _collapse_target(a, b, xy, bvert, on_comp, dist, comps):
    a_b, b_b = a in bvert, b in bvert
    a_fix = on_comp[a].sum() >= 2
    b_fix = on_comp[b].sum() >= 2
    if a_fix and b_fix:
        return None
    if a_fix:
        return a, b, xy[a]
    if b_fix:
        return b, a, xy[b]
    if a_b and b_b:
        ca, cb = int(np.argmin(dist[a])), int(np.argmin(dist[b]))
        if ca != cb:
            return None
        pos = 0.5 * (xy[a] + xy[b])
        comp = comps[ca]
        if hasattr(comp, "project") and not comp.exact_reflection:
            pos = comp.project(pos[None, :])[0]
        return a, b, pos
    if a_b:
        return a, b, xy[a]
    if b_b:
        return b, a, xy[b]
    return a, b, 0.5 * (xy[a] + xy[b])


def _finalize(xy, polys, domain) -> PolygonalMesh:
    # orient every loop counter-clockwise
    polys = [p if _signed_area(xy[p]) > 0 else p[::-1].copy() for p in polys]
    if domain is not None:
        snap_tol = 1e-9 * math.sqrt(domain.area / max(len(polys), 1))
        for comp in domain.components:
            if comp.exact_reflection and hasattr(comp, "normal"):
                d = comp.distance(xy)
                on = np.abs(d) < snap_tol
                xy[on] -= d[on, None] * np.asarray(comp.normal)[None, :]
    edge_count: dict = {}
    for e, p in enumerate(polys):
        for k in range(len(p)):
            a, b = int(p[k]), int(p[(k + 1) % len(p)])
            edge_count.setdefault((min(a, b), max(a, b)), []).append((e, k))
    bedges = []
    comps = domain.components if domain is not None else []
    for (a, b), owners in edge_count.items():
        if len(owners) == 1:
            e, k = owners[0]
            tag = 0
            if comps:
                mid = 0.5 * (xy[a] + xy[b])[None, :]
                tag = int(np.argmin([abs(c.distance(mid)[0]) for c in comps]))
            bedges.append((e, k, tag))
    bedges.sort()
    mesh = PolygonalMesh(xy, polys, np.array(bedges, dtype=np.int64).reshape(-1, 3), domain)
    check_mesh(mesh)
    return mesh


# ---------------------------------------------------------------------------
# public generators


def generate_voronoi_mesh(domain: Domain, n_elements: int, lloyd_iters: int = LLOYD_ITERS,
                          seed: int = 0, collapse_ratio: float = COLLAPSE_RATIO) -> PolygonalMesh:
    """Centroidal Voronoi mesh of ``domain`` with exactly ``n_elements`` cells."""
    if n_elements < 1:
        raise ValueError("n_elements must be >= 1")
    rng = np.random.default_rng(seed)
    h = math.sqrt(domain.area / n_elements)
    alpha = REFLECT_FACTOR * h
    seeds = _random_points(domain, n_elements, rng)
    seeds = _lloyd(seeds, domain, lloyd_iters, alpha)
    verts, flat, ptr = _voronoi_cells(seeds, domain, alpha)
    mesh = _cells_to_mesh(verts, flat, ptr, domain, h, collapse_ratio)
    if mesh.n_elements != n_elements:
        raise MeshGenerationError(f"expected {n_elements} cells, got {mesh.n_elements}")
    return mesh


def structured_polygonal_count(rows: int, cols: int) -> int:
    """Cells produced by :func:`generate_structured_polygonal_mesh`."""
    return rows * cols - rows // 2


def generate_structured_polygonal_mesh(domain: Rectangle, rows: int, cols: int) -> PolygonalMesh:
    """Hexagon-dominant tiling from staggered seed rows, clipped by reflection.

    Even rows (counted from the bottom) carry ``cols`` seeds at the centres of
    ``cols`` equal slots, odd rows carry ``cols - 1`` seeds on the slot
    boundaries, so the count is ``rows * cols - rows // 2``.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if not isinstance(domain, Rectangle):
        raise TypeError("structured polygonal meshes need a rectangle")
    dx, dy = domain.width / cols, domain.height / rows
    seeds = []
    for j in range(rows):
        y = domain.y0 + (j + 0.5) * dy
        if j % 2 == 0:
            xs = domain.x0 + (np.arange(cols) + 0.5) * dx
        else:
            xs = domain.x0 + np.arange(1, cols) * dx
        seeds.extend((x, y) for x in xs)
    seeds = np.array(seeds, dtype=float)
    h = math.sqrt(dx * dy)
    verts, flat, ptr = _voronoi_cells(seeds, domain, REFLECT_FACTOR * h)
    mesh = _cells_to_mesh(verts, flat, ptr, domain, h, 0.0)
    assert mesh.n_elements == structured_polygonal_count(rows, cols)
    return mesh


def generate_quad_mesh(domain: Rectangle, nx: int, ny: int) -> PolygonalMesh:
    """Tensor grid of ``nx * ny`` rectangles, numbered row by row."""
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be >= 1")
    xs = np.linspace(domain.x0, domain.x1, nx + 1)
    ys = np.linspace(domain.y0, domain.y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    xy = np.column_stack([X.ravel(), Y.ravel()])
    vid = lambda i, j: j * (nx + 1) + i  # noqa: E731
    polys, bedges = [], []
    for j in range(ny):
        for i in range(nx):
            e = len(polys)
            polys.append([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)])
            if j == 0:
                bedges.append((e, 0, 0))
            if i == nx - 1:
                bedges.append((e, 1, 1))
            if j == ny - 1:
                bedges.append((e, 2, 2))
            if i == 0:
                bedges.append((e, 3, 3))
    return PolygonalMesh(xy, polys, np.array(bedges), domain)


def generate_disk_quad_mesh(domain: Circle, m: int, k: int, inner: float = 0.45) -> PolygonalMesh:
    """O-grid quadrilateral mesh of a disk: ``m*m`` core cells plus ``4*m*k`` ring cells.

    The core is a square of half-width ``inner * R``; each of the four ring
    blocks blends linearly between a core side and a quarter of the circle.
    """
    if m < 1 or k < 1:
        raise ValueError("m and k must be >= 1")
    R, c = domain.radius, np.array([domain.cx, domain.cy])
    a = inner * R
    quads = []
    g = np.linspace(-a, a, m + 1)
    for j in range(m):
        for i in range(m):
            quads.append([(g[i], g[j]), (g[i + 1], g[j]), (g[i + 1], g[j + 1]), (g[i], g[j + 1])])
    t = np.linspace(0.0, 1.0, m + 1)
    s = np.linspace(0.0, 1.0, k + 1)
    for side in range(4):
        rot = side * math.pi / 2
        cr, sr = math.cos(rot), math.sin(rot)
        inner_pts = np.column_stack([np.full(m + 1, a), a * (2 * t - 1)])
        th = -math.pi / 4 + t * math.pi / 2
        outer_pts = R * np.column_stack([np.cos(th), np.sin(th)])
        P = (1 - s)[None, :, None] * inner_pts[:, None, :] + s[None, :, None] * outer_pts[:, None, :]
        P = P @ np.array([[cr, sr], [-sr, cr]])
        for i in range(m):
            for jj in range(k):
                quads.append([tuple(P[i, jj]), tuple(P[i, jj + 1]), tuple(P[i + 1, jj + 1]),
                              tuple(P[i + 1, jj])])
    pts = np.array([p for q in quads for p in q]) + c
    polys = [np.arange(4 * q, 4 * q + 4) for q in range(len(quads))]
    xy, polys = _merge_close_vertices(pts, polys, 1e-9 * R)
    return _finalize(xy, polys, domain)
