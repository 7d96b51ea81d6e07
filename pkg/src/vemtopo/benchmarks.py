"""Catalog of the reference experiments and qualitative layout checks."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from vemtopo.mesh import Circle, PolygonalMesh, Rectangle
from vemtopo.problem import (
    BoundarySpec,
    DiskRegion,
    MeshRecipe,
    Pin,
    PointLoad,
    ProblemDefinition,
)
from vemtopo.system import InflowProfile
from vemtopo.vem_elements import MaterialModel, PenaltyLaw

E_YOUNG = 1.0
NU = 0.3
NU_INCOMPRESSIBLE = 0.4999999
RHO_MIN_ELASTIC = 1e-3
RHO_MIN_STOKES = 1e-2
STOKES_MU0 = 1.0
STOKES_LAMBDA0 = 1e3

NAMES = (
    "rect_cantilever",
    "square_cantilever",
    "circle_four_loads",
    "incompressible_bench",
    "stokes_pipe",
    "stokes_pipe_obstacle",
    "stokes_diffuser",
    "stokes_diffuser_obstacle",
)

# structured tiling columns for the 2x1 cantilever: round(2 * rows / 1.02)
_STRUCTURED_ASPECT = 1.02


def _elastic(**kw) -> MaterialModel:
    return MaterialModel.from_young_poisson(E_YOUNG, NU, p=3.0, **kw)


def _stokes_material() -> MaterialModel:
    return MaterialModel(lambda0=STOKES_LAMBDA0, mu0=STOKES_MU0, mode="stokes")


def cantilever_recipe(kind: str, res: int, aspect: float, seed: int = 0) -> MeshRecipe:
    """Mesh recipe with ``res`` cells across the unit thickness of an ``aspect`` x 1 beam."""
    if kind == "structured":
        return MeshRecipe("structured", {"rows": res, "cols": round(aspect * res / _STRUCTURED_ASPECT)})
    if kind == "quad":
        return MeshRecipe("quad", {"nx": int(aspect * res), "ny": res})
    if kind == "voronoi":
        return MeshRecipe("voronoi", {"n": int(round(aspect * res * res)), "seed": seed})
    raise ValueError(f"unknown mesh kind {kind!r}")


def rect_cantilever(res: int = 32, mesh: str = "structured", r_min: float = 1.5,
                    seed: int = 0) -> ProblemDefinition:
    return ProblemDefinition(
        name="rect_cantilever",
        domain=Rectangle(0.0, 0.0, 2.0, 1.0),
        mesh_recipe=cantilever_recipe(mesh, res, 2.0, seed),
        material=_elastic(),
        boundary=BoundarySpec(clamps=["left"], point_loads=[PointLoad((2.0, 0.5), (0.0, -1.0))]),
        volume_fraction=0.3,
        r_min_factor=r_min,
        rho_min=RHO_MIN_ELASTIC,
        expected={"components": [1, 3]},
    )


def square_cantilever(res: int = 64, mesh: str = "voronoi", r_min: float = 3.0,
                      seed: int = 0) -> ProblemDefinition:
    return ProblemDefinition(
        name="square_cantilever",
        domain=Rectangle(0.0, 0.0, 1.0, 1.0),
        mesh_recipe=cantilever_recipe(mesh, res, 1.0, seed),
        material=_elastic(),
        boundary=BoundarySpec(clamps=["left"], point_loads=[PointLoad((1.0, 0.5), (0.0, -1.0))]),
        volume_fraction=0.3,
        r_min_factor=r_min,
        rho_min=RHO_MIN_ELASTIC,
        expected={"components": [1, 3], "members_at_load": 3},
    )


def circle_loads() -> list:
    """Self-balanced tangential loads at A=(1,0), B=(0,1), C=(-1,0), D=(0,-1)."""
    pts = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]
    out = []
    for i, (x, y) in enumerate(pts):
        sign = 1.0 if i % 2 == 0 else -1.0
        out.append(PointLoad((x, y), (-sign * y, sign * x)))
    return out


def circle_four_loads(mesh: str = "voronoi", rotate_deg: float = 0.0, r_min: float = 3.0,
                      n: int = 2268, seed: int = 0) -> ProblemDefinition:
    if mesh == "voronoi":
        recipe = MeshRecipe("voronoi", {"n": n, "seed": seed}, math.radians(rotate_deg))
    elif mesh == "quad":
        recipe = MeshRecipe("disk_quad", {"m": 22, "k": 19}, math.radians(rotate_deg))
    else:
        raise ValueError(f"unknown mesh kind {mesh!r}")
    return ProblemDefinition(
        name="circle_four_loads",
        domain=Circle(0.0, 0.0, 1.0),
        mesh_recipe=recipe,
        material=_elastic(),
        boundary=BoundarySpec(
            pins=[Pin((0.0, 0.0), (0, 1)), Pin((0.5, 0.0), (1,))],
            point_loads=circle_loads(),
        ),
        volume_fraction=0.3,
        r_min_factor=r_min,
        rho_min=RHO_MIN_ELASTIC,
        expected={"components": [1, 5]},
    )


def incompressible_bench(n: int = 4096, r_min: float = 1.5, seed: int = 0) -> ProblemDefinition:
    """Half of a unit square under a top-corner load, symmetry on the cut x = 0.5."""
    base = MaterialModel.from_young_poisson(E_YOUNG, NU_INCOMPRESSIBLE)
    material = MaterialModel(base.lambda0, base.mu0, p=3.0, p_mu=3.0, p_lambda=6.0,
                             mode="nearly_incompressible")
    return ProblemDefinition(
        name="incompressible_bench",
        domain=Rectangle(0.0, 0.0, 0.5, 1.0),
        mesh_recipe=MeshRecipe("voronoi", {"n": n, "seed": seed}),
        material=material,
        boundary=BoundarySpec(clamps=["bottom"], rollers=[("right", 0)],
                              point_loads=[PointLoad((0.5, 1.0), (0.0, -0.5))]),
        volume_fraction=0.3,
        r_min_factor=r_min,
        rho_min=RHO_MIN_ELASTIC,
        expected={"components": [1, 3]},
    )


def _stokes(name, profiles, vf, res, r_min, obstacle, seed, symmetry) -> ProblemDefinition:
    return ProblemDefinition(
        name=name,
        domain=Rectangle(0.0, 0.0, 1.0, 1.0),
        mesh_recipe=MeshRecipe("voronoi", {"n": res * res, "seed": seed}),
        material=_stokes_material(),
        penalty=PenaltyLaw.from_viscosity(STOKES_MU0),
        boundary=BoundarySpec(inflow_profiles=profiles, no_slip=True),
        volume_fraction=vf,
        r_min_factor=r_min,
        non_design=[] if obstacle is None else [obstacle],
        rho_min=RHO_MIN_STOKES,
        expected={"symmetry": symmetry, "energy_drop": 0.2},
    )


def pipe_profiles() -> list:
    return [
        InflowProfile("left", (1.0, 0.0), 1.0, 0.2, (0.0, 0.8)),
        InflowProfile("bottom", (0.0, -1.0), 1.0, 0.2, (0.8, 0.0)),
    ]


def diffuser_profiles() -> list:
    return [
        InflowProfile("left", (1.0, 0.0), 1.0, 1.0, (0.0, 0.5)),
        InflowProfile("right", (1.0, 0.0), 3.0, 1.0 / 3.0, (1.0, 0.5)),
    ]


def stokes_pipe(res: int = 64, r_min: float = 1.5, seed: int = 0, obstacle: bool = False):
    name = "stokes_pipe_obstacle" if obstacle else "stokes_pipe"
    obs = DiskRegion((0.5, 0.5), 0.3) if obstacle else None
    return _stokes(name, pipe_profiles(), 0.33, res, r_min, obs, seed, "diagonal")


def stokes_diffuser(res: int = 64, r_min: float = 1.5, seed: int = 0, obstacle: bool = False):
    name = "stokes_diffuser_obstacle" if obstacle else "stokes_diffuser"
    obs = DiskRegion((0.5, 0.5), 0.1) if obstacle else None
    return _stokes(name, diffuser_profiles(), 0.5, res, r_min, obs, seed, "horizontal")


def catalog() -> list:
    return [
        rect_cantilever(),
        square_cantilever(),
        circle_four_loads(),
        incompressible_bench(),
        stokes_pipe(),
        stokes_pipe(obstacle=True),
        stokes_diffuser(),
        stokes_diffuser(obstacle=True),
    ]


def get_problem(name: str, res: int | None = None, r_min: float | None = None,
                **kwargs) -> ProblemDefinition:
    """Catalog entry by name with optional resolution and filter-radius overrides."""
    builders = {
        "rect_cantilever": rect_cantilever,
        "square_cantilever": square_cantilever,
        "circle_four_loads": circle_four_loads,
        "incompressible_bench": incompressible_bench,
        "stokes_pipe": stokes_pipe,
        "stokes_pipe_obstacle": lambda **k: stokes_pipe(obstacle=True, **k),
        "stokes_diffuser": stokes_diffuser,
        "stokes_diffuser_obstacle": lambda **k: stokes_diffuser(obstacle=True, **k),
    }
    if name not in builders:
        raise KeyError(f"unknown problem {name!r}; choose from {', '.join(NAMES)}")
    if r_min is not None:
        kwargs["r_min"] = r_min
    if res is not None:
        if name == "circle_four_loads":
            kwargs["n"] = int(res)
        elif name == "incompressible_bench":
            kwargs["n"] = int(res) * int(res)
        else:
            kwargs["res"] = int(res)
    return builders[name](**kwargs)


def net_force_and_moment(loads) -> tuple[np.ndarray, float]:
    f = np.zeros(2)
    m = 0.0
    for pl in loads:
        f += pl.force
        m += pl.point[0] * pl.force[1] - pl.point[1] * pl.force[0]
    return f, m


# ---------------------------------------------------------------------------
# qualitative checks


GRAY_THRESHOLD = 0.25
VOLUME_TOL = 1e-3
ROTATION_GAP = 0.05
CHECKER_THRESHOLD = 0.01
SYMMETRY_TOL = 0.02
SOLID = 0.5


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.value:.6g} ({self.threshold})"


def gray_level(rho: np.ndarray) -> float:
    rho = np.asarray(rho, dtype=float)
    return float(np.mean(4.0 * rho * (1.0 - rho)))


def volume_fraction_of(mesh: PolygonalMesh, rho) -> float:
    return float(mesh.areas @ np.asarray(rho) / mesh.total_area)


def checkerboard_indicator(mesh: PolygonalMesh, rho, jump: float = 0.8) -> float:
    """Fraction of edge-adjacent pairs whose densities differ by more than ``jump``."""
    adj = mesh.adjacency
    if len(adj) == 0:
        return 0.0
    rho = np.asarray(rho)
    return float(np.mean(np.abs(rho[adj[:, 0]] - rho[adj[:, 1]]) > jump))


def solid_components(mesh: PolygonalMesh, rho, threshold: float = SOLID) -> int:
    solid = np.asarray(rho) > threshold
    adj = mesh.adjacency
    keep = solid[adj[:, 0]] & solid[adj[:, 1]]
    idx = np.flatnonzero(solid)
    if idx.size == 0:
        return 0
    remap = -np.ones(mesh.n_elements, dtype=np.int64)
    remap[idx] = np.arange(idx.size)
    a, b = remap[adj[keep, 0]], remap[adj[keep, 1]]
    g = coo_matrix((np.ones(len(a)), (a, b)), shape=(idx.size, idx.size))
    return int(connected_components(g, directed=False)[0])


def members_at_point(mesh: PolygonalMesh, rho, point, radii=None, threshold: float = SOLID,
                     samples: int = 1440) -> int:
    """Number of solid members crossing circles around ``point`` (median over radii).

    Each circle is sampled densely; samples outside the domain count as void
    and every maximal run of solid samples counts as one member. Default radii
    lie between a quarter and 0.4 of the domain size, which clears the solid
    joint that forms around a loaded vertex.
    """
    rho = np.asarray(rho)
    point = np.asarray(point, dtype=float)
    dm = mesh.mean_size
    if radii is None:
        x0, y0, x1, y1 = mesh.vertices[:, 0].min(), mesh.vertices[:, 1].min(), \
            mesh.vertices[:, 0].max(), mesh.vertices[:, 1].max()
        size = min(x1 - x0, y1 - y0)
        radii = [max(f * size, 4 * dm) for f in (0.25, 0.2875, 0.325, 0.3625, 0.4)]
    counts = []
    th = np.linspace(0.0, 2 * math.pi, samples, endpoint=False)
    for r in radii:
        pts = point + r * np.column_stack([np.cos(th), np.sin(th)])
        if mesh.domain is not None:
            inside = mesh.domain.signed_distance(pts) < -0.25 * dm
        else:
            inside = np.ones(samples, dtype=bool)
        solid = np.zeros(samples, dtype=bool)
        solid[inside] = rho[mesh.locate(pts[inside])] > threshold
        counts.append(_count_runs(solid))
    return int(np.median(counts))


def _count_runs(flags: np.ndarray) -> int:
    """Maximal runs of True on a cyclic sequence."""
    if not flags.any():
        return 0
    if flags.all():
        return 1
    return int(np.sum(flags & ~np.roll(flags, 1)))


def symmetry_defect(mesh: PolygonalMesh, rho, axis: str, center=(0.5, 0.5)) -> float:
    """Relative mismatch of material between the two sides of a mirror line.

    ``axis``: "horizontal" (mirror y about center y), "vertical" (x about center x)
    or "diagonal" (swap x and y). Returns |m1 - m2| / (m1 + m2) where m is the
    material (area times density) on each side.
    """
    c = mesh.centroids - np.asarray(center)
    if axis == "horizontal":
        side = c[:, 1]
    elif axis == "vertical":
        side = c[:, 0]
    elif axis == "diagonal":
        side = c[:, 1] - c[:, 0]
    else:
        raise ValueError(f"unknown symmetry axis {axis!r}")
    # cells centred on the line belong to neither side
    tol = 1e-9 * mesh.mean_size
    mass = mesh.areas * np.asarray(rho)
    m1, m2 = mass[side > tol].sum(), mass[side < -tol].sum()
    return float(abs(m1 - m2) / (m1 + m2))


def mirror_mismatch(mesh: PolygonalMesh, rho, axis: str, center=(0.5, 0.5)) -> float:
    """Area-weighted mean |rho(x) - rho(mirror x)| divided by the mean density."""
    c = mesh.centroids - np.asarray(center)
    if axis == "horizontal":
        m = np.column_stack([c[:, 0], -c[:, 1]])
    elif axis == "vertical":
        m = np.column_stack([-c[:, 0], c[:, 1]])
    elif axis == "diagonal":
        m = np.column_stack([c[:, 1], c[:, 0]])
    else:
        raise ValueError(f"unknown symmetry axis {axis!r}")
    rho = np.asarray(rho)
    other = rho[mesh.locate(m + np.asarray(center))]
    return float(mesh.areas @ np.abs(rho - other) / (mesh.areas @ rho))


def expected_qualitative_checks(problem: ProblemDefinition, mesh: PolygonalMesh, rho,
                                objective: float | None = None,
                                pair_objective: float | None = None) -> list:
    """Pass/fail report for a final physical density field."""
    rho = np.asarray(rho, dtype=float)
    report = []
    gl = gray_level(rho)
    report.append(Check("gray_level", gl < GRAY_THRESHOLD, gl, f"< {GRAY_THRESHOLD}"))
    vol = volume_fraction_of(mesh, rho)
    report.append(Check("volume", vol <= problem.volume_fraction + VOLUME_TOL, vol,
                        f"<= {problem.volume_fraction} + {VOLUME_TOL}"))
    if objective is not None and pair_objective is not None:
        gap = abs(objective - pair_objective) / min(abs(objective), abs(pair_objective))
        report.append(Check("rotation_gap", gap < ROTATION_GAP, gap, f"< {ROTATION_GAP}"))
    exp = problem.expected
    if "components" in exp:
        lo, hi = exp["components"]
        n = solid_components(mesh, rho)
        report.append(Check("solid_components", lo <= n <= hi, n, f"in [{lo}, {hi}]"))
    if "members_at_load" in exp and problem.boundary.point_loads:
        v = problem.boundary.load_vertices(mesh)[0]
        n = members_at_point(mesh, rho, mesh.vertices[v])
        report.append(Check("members_at_load", n == exp["members_at_load"], n,
                            f"== {exp['members_at_load']}"))
    if "symmetry" in exp:
        d = symmetry_defect(mesh, rho, exp["symmetry"])
        report.append(Check(f"symmetry_{exp['symmetry']}", d < SYMMETRY_TOL, d, f"< {SYMMETRY_TOL}"))
    mask = problem.non_design_mask(mesh)
    if mask.any():
        ok = bool(np.all(rho[mask] == problem.rho_min))
        report.append(Check("non_design_frozen", ok, float(np.abs(rho[mask] - problem.rho_min).max()),
                            "== 0"))
    return report
