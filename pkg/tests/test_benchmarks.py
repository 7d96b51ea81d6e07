import time

import numpy as np
import pytest

from vemtopo.benchmarks import (
    NAMES,
    catalog,
    checkerboard_indicator,
    circle_four_loads,
    circle_loads,
    expected_qualitative_checks,
    get_problem,
    gray_level,
    members_at_point,
    net_force_and_moment,
    rect_cantilever,
    solid_components,
    square_cantilever,
    stokes_diffuser,
    stokes_pipe,
    symmetry_defect,
)
from vemtopo.mesh import Rectangle, generate_quad_mesh
from vemtopo.problem import BoundarySpec, DiskRegion, ProblemDefinition
from vemtopo.system import Assembler, assemble, compliance, dissipated_energy, solve
from vemtopo.vem_elements import MaterialModel

OUTWARD = {"left": (-1.0, 0.0), "right": (1.0, 0.0), "bottom": (0.0, -1.0), "top": (0.0, 1.0)}


@pytest.fixture(scope="module")
def grid():
    return generate_quad_mesh(Rectangle(), 40, 40)


def test_catalog_has_eight_families():
    problems = catalog()
    assert len(problems) == 8
    assert tuple(p.name for p in problems) == NAMES


@pytest.mark.parametrize("factory", [stokes_pipe, stokes_diffuser])
def test_stokes_flux_balance(factory):
    problem = factory(res=8)
    net = sum(p.flux * float(np.dot(p.direction, OUTWARD[p.tag])) for p in problem.boundary.inflow_profiles)
    assert abs(net) <= 1e-12
    assert all(p.flux > 0 for p in problem.boundary.inflow_profiles)


def test_diffuser_profile_fluxes():
    inlet, outlet = stokes_diffuser(res=8).boundary.inflow_profiles
    assert inlet.flux == pytest.approx(2.0 / 3.0, rel=1e-15)
    assert outlet.flux == pytest.approx(2.0 / 3.0, rel=1e-15)


def test_circle_loads_are_self_balanced():
    force, moment = net_force_and_moment(circle_loads())
    assert np.all(force == 0.0)
    assert moment == 0.0
    assert all(np.hypot(*pl.force) == 1.0 for pl in circle_loads())


def test_gray_level_examples(grid):
    assert gray_level(np.full(10, 0.3)) == pytest.approx(0.84, rel=1e-15)
    assert gray_level(np.ones(10)) == 0.0
    problem = rect_cantilever(res=4)
    mesh = problem.build_mesh()
    uniform = {c.name: c for c in expected_qualitative_checks(problem, mesh, np.full(mesh.n_elements, 0.3))}
    assert not uniform["gray_level"].passed and uniform["gray_level"].value == pytest.approx(0.84)
    assert uniform["volume"].passed
    solid = {c.name: c for c in expected_qualitative_checks(problem, mesh, np.ones(mesh.n_elements))}
    assert solid["gray_level"].passed and not solid["volume"].passed
    assert uniform["gray_level"].line().startswith("FAIL gray_level: 0.84")


def test_rotation_gap_check():
    problem = circle_four_loads(n=200)
    mesh = problem.build_mesh()
    rho = np.ones(mesh.n_elements)
    close = {c.name: c for c in expected_qualitative_checks(problem, mesh, rho, 1.0, 1.04)}
    far = {c.name: c for c in expected_qualitative_checks(problem, mesh, rho, 1.0, 1.06)}
    assert close["rotation_gap"].passed and not far["rotation_gap"].passed


def _bars(mesh, origin, angles, width):
    """Density 1 on straight bars of the given width leaving ``origin``."""
    c = mesh.centroids - np.asarray(origin)
    rho = np.full(mesh.n_elements, 1e-3)
    for a in angles:
        d = np.array([np.cos(a), np.sin(a)])
        along = c @ d
        across = np.abs(c @ np.array([-d[1], d[0]]))
        rho[(along > 0) & (across < width / 2)] = 1.0
    return rho


@pytest.mark.parametrize("angles, expected", [
    ((np.pi,), 1),
    ((3 * np.pi / 4, 5 * np.pi / 4), 2),
    ((3 * np.pi / 4, np.pi, 5 * np.pi / 4), 3),
])
def test_members_at_point_on_synthetic_bars(grid, angles, expected):
    rho = _bars(grid, (1.0, 0.5), angles, 0.08)
    assert members_at_point(grid, rho, (1.0, 0.5)) == expected


def test_members_at_interior_point_counts_all_directions(grid):
    rho = _bars(grid, (0.5, 0.5), np.arange(4) * np.pi / 2 + 0.3, 0.08)
    assert members_at_point(grid, rho, (0.5, 0.5), radii=[0.3, 0.35, 0.4]) == 4


def test_symmetry_defect(grid):
    c = grid.centroids
    rho = np.where(np.abs(c[:, 0] - c[:, 1]) < 0.21, 1.0, 0.01)
    assert symmetry_defect(grid, rho, "diagonal") == pytest.approx(0.0, abs=1e-14)
    upper = np.where(c[:, 1] > c[:, 0], 1.0, 0.0)
    assert symmetry_defect(grid, upper, "diagonal") == 1.0
    band = np.where(np.abs(c[:, 1] - 0.5) < 0.11, 1.0, 0.01)
    assert symmetry_defect(grid, band, "horizontal") == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ValueError):
        symmetry_defect(grid, band, "sideways")


def test_checkerboard_and_components():
    mesh = generate_quad_mesh(Rectangle(), 4, 4)
    i, j = np.divmod(np.arange(16), 4)
    order = np.lexsort((mesh.centroids[:, 0], mesh.centroids[:, 1]))
    checker = np.empty(16)
    checker[order] = ((i + j) % 2).astype(float)
    assert checkerboard_indicator(mesh, checker) == 1.0
    assert checkerboard_indicator(mesh, np.full(16, 0.5)) == 0.0
    left_right = np.where(np.abs(mesh.centroids[:, 0] - 0.5) > 0.3, 1.0, 0.0)
    assert solid_components(mesh, left_right) == 2
    assert solid_components(mesh, np.zeros(16)) == 0


SMALLEST = {"rect_cantilever": 32, "square_cantilever": 64}


@pytest.mark.parametrize("name", NAMES)
def test_catalog_entry_solves_at_smallest_resolution(name):
    t0 = time.perf_counter()
    problem = get_problem(name, res=SMALLEST.get(name))
    mesh = problem.build_mesh()
    rho = np.where(problem.non_design_mask(mesh), problem.rho_min, problem.volume_fraction)
    system = assemble(Assembler(mesh, problem.material, problem.penalty), rho, problem.boundary.build(mesh))
    u = solve(system)
    value = (dissipated_energy(system.full_matrix, u) if problem.objective == "energy"
             else compliance(system.loads, u))
    assert np.isfinite(value) and value > 0
    assert time.perf_counter() - t0 < 60


@pytest.mark.parametrize("problem", catalog(), ids=NAMES)
def test_problem_dict_round_trip(problem):
    back = ProblemDefinition.from_dict(problem.to_dict())
    assert back.to_dict() == problem.to_dict()


def test_obstacles_lie_strictly_inside():
    for problem in catalog():
        for region in problem.non_design:
            assert region.radius > 0
    with pytest.raises(ValueError, match="strictly inside"):
        stokes_pipe(res=8).with_changes(non_design=[DiskRegion((0.9, 0.5), 0.2)])


def test_problem_validation():
    base = square_cantilever(res=8)
    with pytest.raises(ValueError):
        base.with_changes(volume_fraction=0.0)
    with pytest.raises(ValueError):
        base.with_changes(rho_min=1.0)
    with pytest.raises(ValueError, match="Dirichlet"):
        base.with_changes(boundary=BoundarySpec(point_loads=base.boundary.point_loads))
    with pytest.raises(ValueError, match="PenaltyLaw"):
        base.with_changes(material=MaterialModel(1e3, 1.0, mode="stokes"))


def test_get_problem_overrides():
    p = get_problem("square_cantilever", res=16, r_min=1.5, mesh="quad")
    assert p.r_min_factor == 1.5 and p.build_mesh().n_elements == 256
    assert get_problem("circle_four_loads", res=300).mesh_recipe.params["n"] == 300
    assert get_problem("stokes_pipe_obstacle").non_design
    with pytest.raises(KeyError):
        get_problem("bridge")
