import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vemtopo.errors import GeometryError
from vemtopo.mesh import (
    Circle,
    PolygonalMesh,
    Rectangle,
    RectangleMinusDisk,
    centroid_distance_table,
    check_regularity,
    element_geometry,
    generate_disk_quad_mesh,
    generate_quad_mesh,
    generate_structured_polygonal_mesh,
    generate_voronoi_mesh,
    polygon_geometry,
    read_mesh,
    rotate_mesh,
    structured_polygonal_count,
    write_mesh,
)


def _edge_lengths(mesh):
    out = []
    for p in mesh.polygons:
        xy = mesh.vertices[p]
        out.append(np.linalg.norm(np.roll(xy, -1, axis=0) - xy, axis=1))
    return np.concatenate(out)


def test_unit_square_single_cell():
    mesh = generate_voronoi_mesh(Rectangle(), 1, seed=7)
    assert mesh.n_elements == 1
    g = element_geometry(mesh, 0)
    assert g.n == 4
    assert g.area == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(g.centroid, [0.5, 0.5], atol=1e-14)


def test_voronoi_square_hexagon_dominant():
    mesh = generate_voronoi_mesh(Rectangle(), 4096, seed=3)
    assert mesh.n_elements == 4096
    counts = np.array([len(p) for p in mesh.polygons])
    assert 5.5 <= counts.mean() <= 6.5
    assert mesh.total_area == pytest.approx(1.0, rel=1e-6)
    assert check_regularity(mesh, warn=False).ok


def test_voronoi_disk_count_and_area():
    mesh = generate_voronoi_mesh(Circle(), 2268, seed=0)
    assert mesh.n_elements == 2268
    # inscribed polygonal boundary: area deficit is O((h/R)^2)
    h = math.sqrt(math.pi / 2268)
    assert abs(mesh.total_area / math.pi - 1) < h**2
    assert check_regularity(mesh, warn=False).ok


def test_voronoi_deterministic():
    a = generate_voronoi_mesh(Rectangle(0, 0, 2, 1), 200, seed=11)
    b = generate_voronoi_mesh(Rectangle(0, 0, 2, 1), 200, seed=11)
    assert np.array_equal(a.vertices, b.vertices)
    assert all(np.array_equal(p, q) for p, q in zip(a.polygons, b.polygons))
    c = generate_voronoi_mesh(Rectangle(0, 0, 2, 1), 200, seed=12)
    assert a.vertices.shape != c.vertices.shape or not np.array_equal(a.vertices, c.vertices)


def test_voronoi_rejects_empty():
    with pytest.raises(ValueError):
        generate_voronoi_mesh(Rectangle(), 0)


@pytest.mark.parametrize(
    "rows,cols,reference",
    [(64, 125, 7990), (32, 63, 2006)],
)
def test_structured_counts_near_reference(rows, cols, reference):
    mesh = generate_structured_polygonal_mesh(Rectangle(0, 0, 2, 1), rows, cols)
    assert mesh.n_elements == structured_polygonal_count(rows, cols)
    assert abs(mesh.n_elements - reference) <= 0.02 * reference
    assert mesh.total_area == pytest.approx(2.0, rel=1e-12)
    assert check_regularity(mesh, warn=False).ok


def test_structured_square_stable():
    a = generate_structured_polygonal_mesh(Rectangle(), 64, 64)
    b = generate_structured_polygonal_mesh(Rectangle(), 64, 64)
    assert a.n_elements == b.n_elements == 64 * 64 - 32
    assert np.array_equal(a.vertices, b.vertices)


def test_structured_rejects_zero():
    with pytest.raises(ValueError):
        generate_structured_polygonal_mesh(Rectangle(), 0, 3)


@pytest.mark.parametrize("nx,ny,count", [(128, 64, 8192), (64, 32, 2048), (1, 1, 1)])
def test_quad_counts(nx, ny, count):
    dom = Rectangle(0, 0, 2, 1) if count > 1 else Rectangle()
    mesh = generate_quad_mesh(dom, nx, ny)
    assert mesh.n_elements == count
    assert mesh.total_area == pytest.approx(dom.area, rel=1e-12)


def test_disk_quad_mesh():
    mesh = generate_disk_quad_mesh(Circle(), 22, 19)
    assert mesh.n_elements == 22 * 22 + 4 * 22 * 19
    assert all(len(p) == 4 for p in mesh.polygons)
    assert abs(mesh.total_area / math.pi - 1) < 2e-3
    assert check_regularity(mesh, warn=False).ok


def test_element_geometry_square_and_triangle():
    g = polygon_geometry(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float))
    assert g.area == 1.0
    assert g.diameter == pytest.approx(math.sqrt(2))
    np.testing.assert_allclose(np.abs(g.normals).sum(axis=1), 1.0)
    np.testing.assert_allclose(g.normals, [[0, -1], [1, 0], [0, 1], [-1, 0]], atol=1e-15)
    t = polygon_geometry(np.array([[0, 0], [1, 0], [0, 1]], dtype=float))
    assert t.area == pytest.approx(0.5)
    np.testing.assert_allclose(t.centroid, [1 / 3, 1 / 3])


def test_regular_hexagon_area():
    th = np.arange(6) * math.pi / 3
    g = polygon_geometry(np.column_stack([np.cos(th), np.sin(th)]))
    assert g.area == pytest.approx(3 * math.sqrt(3) / 2, rel=1e-14)
    assert g.diameter == pytest.approx(2.0)


def test_degenerate_polygon_raises():
    with pytest.raises(GeometryError):
        polygon_geometry(np.array([[0, 0], [1, 0], [2, 0]], dtype=float))
    mesh = PolygonalMesh(np.array([[0, 0], [1, 0], [2, 0.0]]), [[0, 1, 2]])
    with pytest.raises(GeometryError):
        element_geometry(mesh, 0)


def test_interior_normals_antiparallel():
    mesh = generate_voronoi_mesh(Rectangle(), 300, seed=2)
    for owners in mesh.edges.values():
        if len(owners) != 2:
            continue
        n = [element_geometry(mesh, e).normals[k] for e, k in owners]
        np.testing.assert_allclose(n[0], -n[1], atol=1e-12)


def test_boundary_tags_rectangle():
    mesh = generate_voronoi_mesh(Rectangle(0, 0, 2, 1), 150, seed=4)
    for tag, name in enumerate(mesh.boundary_names):
        vs = mesh.vertices[mesh.vertices_on_tag(name)]
        coord = {"bottom": (1, 0.0), "right": (0, 2.0), "top": (1, 1.0), "left": (0, 0.0)}[name]
        np.testing.assert_allclose(vs[:, coord[0]], coord[1], atol=1e-12)
    total = sum(
        np.linalg.norm(
            mesh.vertices[mesh.polygons[e][(k + 1) % len(mesh.polygons[e])]]
            - mesh.vertices[mesh.polygons[e][k]]
        )
        for e, k, _ in mesh.boundary_edges
    )
    assert total == pytest.approx(6.0, rel=1e-12)


def test_rotate_identity_and_quarter_turn():
    mesh = generate_voronoi_mesh(Rectangle(), 50, seed=1)
    same = rotate_mesh(mesh, 0.0)
    assert np.array_equal(same.vertices, mesh.vertices)
    q = rotate_mesh(mesh, math.pi / 2)
    np.testing.assert_allclose(q.areas, mesh.areas, rtol=0, atol=1e-14)


def test_rotate_disk_30_degrees():
    mesh = generate_voronoi_mesh(Circle(), 400, seed=5)
    rot = rotate_mesh(mesh, math.radians(30))
    np.testing.assert_allclose(rot.areas, mesh.areas, rtol=1e-12)
    center = mesh.centroids.T @ mesh.areas / mesh.total_area
    np.testing.assert_allclose(rot.centroids.T @ rot.areas / rot.total_area, center, atol=1e-14)


_SMALL_MESHES = {}


def _small_mesh(seed):
    if seed not in _SMALL_MESHES:
        _SMALL_MESHES[seed] = generate_voronoi_mesh(Rectangle(0, 0, 1.5, 1), 60, lloyd_iters=10,
                                                    seed=seed)
    return _SMALL_MESHES[seed]


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 4), angle=st.floats(-2 * math.pi, 2 * math.pi),
       cx=st.floats(-3, 3), cy=st.floats(-3, 3))
def test_rotation_is_isometry(seed, angle, cx, cy):
    mesh = _small_mesh(seed)
    rot = rotate_mesh(mesh, angle, center=(cx, cy))
    np.testing.assert_allclose(rot.areas, mesh.areas, rtol=1e-12)
    np.testing.assert_allclose(_edge_lengths(rot), _edge_lengths(mesh), rtol=1e-12)
    assert all(np.array_equal(p, q) for p, q in zip(rot.polygons, mesh.polygons))


def _brute_table(mesh, r_min):
    c = mesh.centroids
    d = np.linalg.norm(c[:, None] - c[None], axis=2)
    rows, cols = np.nonzero(d < r_min)
    return rows, cols, d[rows, cols]


def test_distance_table_diagonal_only():
    mesh = generate_quad_mesh(Rectangle(), 8, 8)
    rows, cols, d = centroid_distance_table(mesh, 0.5 / 8)
    assert np.array_equal(rows, cols)
    assert np.all(d == 0)


def test_distance_table_two_elements():
    mesh = generate_quad_mesh(Rectangle(0, 0, 1, 0.5), 2, 1)
    rows, cols, d = centroid_distance_table(mesh, 1.0)
    table = {(int(r), int(c)): v for r, c, v in zip(rows, cols, d)}
    assert table[(0, 1)] == table[(1, 0)] == pytest.approx(0.5)
    assert table[(0, 0)] == table[(1, 1)] == 0.0


def test_distance_table_quad_grid_matches_brute_force():
    mesh = generate_quad_mesh(Rectangle(), 64, 64)
    r_min = 1.5 / 64
    rows, cols, d = centroid_distance_table(mesh, r_min)
    br, bc, bd = _brute_table(mesh, r_min)
    order = np.lexsort((bc, br))
    assert np.array_equal(rows, br[order]) and np.array_equal(cols, bc[order])
    np.testing.assert_allclose(d, bd[order], atol=1e-15)
    # diagonal neighbours sit at sqrt(2)/64 < 1.5/64, so interior cells see 8
    counts = np.bincount(rows, minlength=mesh.n_elements) - 1
    interior = [j * 64 + i for j in range(1, 63) for i in range(1, 63)]
    assert set(counts[interior].tolist()) == {8}


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 4), r=st.floats(0.01, 0.6))
def test_distance_table_symmetric_random(seed, r):
    mesh = _small_mesh(seed)
    rows, cols, d = centroid_distance_table(mesh, r)
    br, bc, _ = _brute_table(mesh, r)
    assert len(rows) == len(br)
    pairs = set(zip(rows.tolist(), cols.tolist()))
    assert pairs == {(c, r_) for r_, c in pairs}
    assert pairs == set(zip(br.tolist(), bc.tolist()))


def test_mesh_text_roundtrip(tmp_path):
    mesh = generate_voronoi_mesh(RectangleMinusDisk(), 120, seed=9)
    path = tmp_path / "m.txt"
    write_mesh(mesh, path)
    back = read_mesh(path)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert all(np.array_equal(p, q) for p, q in zip(back.polygons, mesh.polygons))
    assert np.array_equal(back.boundary_edges, mesh.boundary_edges)
    assert path.read_text().startswith(f"#vertices {mesh.n_vertices}\n")
