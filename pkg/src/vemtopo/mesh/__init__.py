"""Polygonal meshes: domains, generators, geometry queries and text I/O."""
from vemtopo.mesh.core import (
    ElementGeometry,
    PolygonalMesh,
    centroid_distance_table,
    check_mesh,
    check_regularity,
    element_geometry,
    polygon_geometry,
    rotate_mesh,
)
from vemtopo.mesh.domains import (
    Circle,
    ConvexPolygon,
    Domain,
    Rectangle,
    RectangleMinusDisk,
    RotatedDomain,
    domain_from_dict,
)
from vemtopo.mesh.generators import (
    generate_disk_quad_mesh,
    generate_quad_mesh,
    generate_structured_polygonal_mesh,
    generate_voronoi_mesh,
    structured_polygonal_count,
)
from vemtopo.mesh.textio import read_mesh, write_mesh

__all__ = [
    "Circle", "ConvexPolygon", "Domain", "ElementGeometry", "PolygonalMesh", "Rectangle",
    "RectangleMinusDisk", "RotatedDomain", "centroid_distance_table", "check_mesh",
    "check_regularity", "domain_from_dict", "element_geometry", "generate_disk_quad_mesh",
    "generate_quad_mesh", "generate_structured_polygonal_mesh", "generate_voronoi_mesh",
    "polygon_geometry", "read_mesh", "rotate_mesh", "structured_polygonal_count", "write_mesh",
]
