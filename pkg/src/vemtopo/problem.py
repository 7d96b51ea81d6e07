"""Declarative problem description shared by the optimizer, the catalog and the CLI.

Boundary conditions are stored by geometry (tags and points) rather than by
vertex index, so one definition can be instantiated on any mesh.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from vemtopo.mesh import (
    Domain,
    PolygonalMesh,
    domain_from_dict,
    generate_disk_quad_mesh,
    generate_quad_mesh,
    generate_structured_polygonal_mesh,
    generate_voronoi_mesh,
    rotate_mesh,
)
from vemtopo.system import BoundaryConditions, InflowProfile, clamp_tag, point_load
from vemtopo.vem_elements import MaterialModel, PenaltyLaw

GENERATORS = ("voronoi", "structured", "quad", "disk_quad")


@dataclass(frozen=True)
class MeshRecipe:
    """Generator name plus its integer parameters and an optional rigid rotation (radians)."""

    generator: str
    params: dict = field(default_factory=dict)
    rotate: float = 0.0

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown mesh generator {self.generator!r}")

    def build(self, domain: Domain) -> PolygonalMesh:
        p = dict(self.params)
        if self.generator == "voronoi":
            mesh = generate_voronoi_mesh(domain, int(p["n"]), int(p.get("lloyd_iters", 100)),
                                         int(p.get("seed", 0)))
        elif self.generator == "structured":
            mesh = generate_structured_polygonal_mesh(domain, int(p["rows"]), int(p["cols"]))
        elif self.generator == "quad":
            mesh = generate_quad_mesh(domain, int(p["nx"]), int(p["ny"]))
        else:
            mesh = generate_disk_quad_mesh(domain, int(p["m"]), int(p["k"]))
        if self.rotate:
            mesh = rotate_mesh(mesh, self.rotate)
        return mesh

    def to_dict(self) -> dict:
        return {"generator": self.generator, "params": dict(self.params), "rotate": self.rotate}


@dataclass(frozen=True)
class PointLoad:
    point: tuple[float, float]
    force: tuple[float, float]
    boundary_only: bool = True  # snap to the nearest boundary vertex


@dataclass(frozen=True)
class Pin:
    point: tuple[float, float]
    components: tuple[int, ...] = (0, 1)


@dataclass
class BoundarySpec:
    """Mesh-independent boundary data.

    ``clamps`` are boundary names fixed in both components, ``rollers`` are
    ``(name, component)`` pairs fixing one component, ``pins`` fix components
    at the vertex nearest a point.
    """

    clamps: list = field(default_factory=list)
    rollers: list = field(default_factory=list)
    pins: list = field(default_factory=list)
    point_loads: list = field(default_factory=list)
    inflow_profiles: list = field(default_factory=list)
    no_slip: bool = False

    def build(self, mesh: PolygonalMesh) -> BoundaryConditions:
        dirichlet = []
        for tag in self.clamps:
            dirichlet += clamp_tag(mesh, tag)
        for tag, comp in self.rollers:
            dirichlet += [(int(v), int(comp), 0.0) for v in mesh.vertices_on_tag(tag)]
        for pin in self.pins:
            v = mesh.nearest_vertex(pin.point)
            dirichlet += [(v, int(c), 0.0) for c in pin.components]
        loads = []
        for pl in self.point_loads:
            cand = mesh.boundary_vertices if pl.boundary_only else None
            loads += point_load(mesh, pl.point, pl.force, cand)
        return BoundaryConditions(dirichlet=dirichlet, loads=loads,
                                  inflow_profiles=list(self.inflow_profiles),
                                  no_slip=self.no_slip)

    def load_vertices(self, mesh: PolygonalMesh) -> list:
        return [mesh.nearest_vertex(pl.point, mesh.boundary_vertices if pl.boundary_only else None)
                for pl in self.point_loads]

    def to_dict(self) -> dict:
        return {
            "clamps": list(self.clamps),
            "rollers": [[t, int(c)] for t, c in self.rollers],
            "pins": [{"point": list(p.point), "components": list(p.components)} for p in self.pins],
            "point_loads": [asdict(p) | {"point": list(p.point), "force": list(p.force)}
                            for p in self.point_loads],
            "inflow_profiles": [p.to_dict() for p in self.inflow_profiles],
            "no_slip": self.no_slip,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundarySpec":
        return cls(
            clamps=list(d.get("clamps", [])),
            rollers=[(t, int(c)) for t, c in d.get("rollers", [])],
            pins=[Pin(tuple(p["point"]), tuple(p.get("components", (0, 1))))
                  for p in d.get("pins", [])],
            point_loads=[PointLoad(tuple(p["point"]), tuple(p["force"]),
                                   bool(p.get("boundary_only", True)))
                         for p in d.get("point_loads", [])],
            inflow_profiles=[InflowProfile(p["tag"], tuple(p["direction"]), float(p["g_star"]),
                                           float(p["length"]), tuple(p["center"]))
                             for p in d.get("inflow_profiles", [])],
            no_slip=bool(d.get("no_slip", False)),
        )


@dataclass(frozen=True)
class DiskRegion:
    """Non-design disk; cells whose centroid lies inside are frozen."""

    center: tuple[float, float]
    radius: float

    def mask(self, mesh: PolygonalMesh) -> np.ndarray:
        c = mesh.centroids - np.asarray(self.center)
        return np.hypot(c[:, 0], c[:, 1]) < self.radius


@dataclass
class ProblemDefinition:
    name: str
    domain: Domain
    mesh_recipe: MeshRecipe
    material: MaterialModel
    boundary: BoundarySpec
    volume_fraction: float
    r_min_factor: float = 1.5
    penalty: PenaltyLaw | None = None
    non_design: list = field(default_factory=list)
    rho_min: float = 1e-3
    expected: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.volume_fraction <= 1:
            raise ValueError("volume fraction must lie in (0, 1]")
        if not 0 < self.rho_min < 1:
            raise ValueError("rho_min must lie in (0, 1)")
        if self.material.mode == "stokes":
            if self.penalty is None:
                raise ValueError("Stokes problems need a PenaltyLaw")
        elif not (self.boundary.clamps or self.boundary.pins or self.boundary.rollers):
            raise ValueError("elasticity problems need Dirichlet supports")
        for region in self.non_design:
            probe = np.array([[region.center[0] + region.radius * math.cos(t),
                               region.center[1] + region.radius * math.sin(t)]
                              for t in np.linspace(0, 2 * math.pi, 16, endpoint=False)])
            if np.any(self.domain.signed_distance(probe) >= 0):
                raise ValueError("non-design region must lie strictly inside the domain")

    @property
    def objective(self) -> str:
        return "energy" if self.material.mode == "stokes" else "compliance"

    def build_mesh(self) -> PolygonalMesh:
        return self.mesh_recipe.build(self.domain)

    def non_design_mask(self, mesh: PolygonalMesh) -> np.ndarray:
        mask = np.zeros(mesh.n_elements, dtype=bool)
        for region in self.non_design:
            mask |= region.mask(mesh)
        return mask

    def with_changes(self, **kwargs) -> "ProblemDefinition":
        return replace(self, **kwargs)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "domain": self.domain.to_dict(),
            "mesh": self.mesh_recipe.to_dict(),
            "material": self.material.to_dict(),
            "boundary": self.boundary.to_dict(),
            "volume_fraction": self.volume_fraction,
            "r_min_factor": self.r_min_factor,
            "rho_min": self.rho_min,
            "non_design": [{"center": list(r.center), "radius": r.radius} for r in self.non_design],
            "expected": dict(self.expected),
        }
        if self.penalty is not None:
            d["penalty"] = self.penalty.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemDefinition":
        mesh = d["mesh"]
        pen = d.get("penalty")
        return cls(
            name=d["name"],
            domain=domain_from_dict(d["domain"]),
            mesh_recipe=MeshRecipe(mesh["generator"], dict(mesh.get("params", {})),
                                   float(mesh.get("rotate", 0.0))),
            material=MaterialModel(**d["material"]),
            boundary=BoundarySpec.from_dict(d.get("boundary", {})),
            volume_fraction=float(d["volume_fraction"]),
            r_min_factor=float(d.get("r_min_factor", 1.5)),
            penalty=PenaltyLaw(**pen) if pen else None,
            non_design=[DiskRegion(tuple(r["center"]), float(r["radius"]))
                        for r in d.get("non_design", [])],
            rho_min=float(d.get("rho_min", 1e-3)),
            expected=dict(d.get("expected", {})),
        )
