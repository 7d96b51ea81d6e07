"""Optimization loop: filter, state solve, self-adjoint sensitivities, MMA/OC update."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from vemtopo.errors import VemTopoError
from vemtopo.mesh.core import PolygonalMesh
from vemtopo.problem import ProblemDefinition
from vemtopo.system import (
    Assembler,
    BoundaryConditions,
    assemble,
    compliance,
    dissipated_energy,
    solve,
)
from vemtopo.topopt.filter import FilterOperator, build_filter
from vemtopo.topopt.mma import MMAState, mma_update
from vemtopo.topopt.oc import oc_update

logger = logging.getLogger(__name__)

STATIONARY_VOLUME_TOL = 1e-12


@dataclass
class DensityField:
    """Raw design values, filtered physical values and the non-design mask."""

    raw: np.ndarray
    physical: np.ndarray
    mask: np.ndarray  # True for non-design (frozen) cells
    frozen: np.ndarray  # values held by frozen cells

    @classmethod
    def initial(cls, n: int, value: float, mask=None, frozen_value: float = 0.0,
                filt: FilterOperator | None = None) -> "DensityField":
        mask = np.zeros(n, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        frozen = np.full(n, frozen_value)
        raw = np.full(n, float(value))
        raw[mask] = frozen[mask]
        field_ = cls(raw, raw.copy(), mask, frozen)
        if filt is not None:
            field_.refilter(filt)
        return field_

    def refilter(self, filt: FilterOperator) -> None:
        self.physical = physical_from_raw(self.raw, filt, self.mask, self.frozen)

    @property
    def design(self) -> np.ndarray:
        return self.raw[~self.mask]


def physical_from_raw(raw, filt: FilterOperator, mask, frozen) -> np.ndarray:
    phys = filt.apply(raw)
    phys[mask] = frozen[mask]
    return phys


@dataclass
class HistoryRecord:
    iter: int
    objective: float
    volume: float
    change: float
    seconds: float


@dataclass
class OptimizerOptions:
    max_iters: int = 400
    tol: float = 0.01
    method: str = "mma"  # or "oc"
    move: float = 0.5  # MMA move limit as a fraction of the box
    r_min_factor: float | None = None  # overrides the problem's value
    callback: object = None  # called with the state after every iteration

    def __post_init__(self):
        if self.method not in ("mma", "oc"):
            raise ValueError(f"unknown optimizer {self.method!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class OptimizationState:
    iteration: int
    design: DensityField
    objective: float
    volume: float
    change: float
    mma_memory: MMAState | None = None
    history: list = field(default_factory=list)
    converged: bool = False
    displacement: np.ndarray | None = None
    error: str | None = None
    scale: float | None = None  # objective normalization used by MMA


class Evaluator:
    """Objective, volume and their gradients with respect to the raw design."""

    def __init__(self, mesh: PolygonalMesh, problem: ProblemDefinition, filt: FilterOperator,
                 bcs: BoundaryConditions | None = None, assembler: Assembler | None = None):
        self.mesh = mesh
        self.problem = problem
        self.filter = filt
        self.assembler = assembler or Assembler(mesh, problem.material, problem.penalty)
        self.bcs = bcs if bcs is not None else problem.boundary.build(mesh)
        self.mask = problem.non_design_mask(mesh)
        self.frozen = np.full(mesh.n_elements, problem.rho_min)
        self.rel_area = mesh.areas / mesh.total_area
        self.last_u = None

    def physical(self, raw):
        return physical_from_raw(raw, self.filter, self.mask, self.frozen)

    def volume(self, raw):
        phys = self.physical(raw)
        g = self.rel_area.copy()
        g[self.mask] = 0.0
        return float(self.rel_area @ phys), self.filter.chain(g)

    def objective(self, raw):
        """(value, gradient w.r.t. raw, displacement)."""
        phys = self.physical(raw)
        system = assemble(self.assembler, phys, self.bcs)
        u = solve(system)
        self.last_u = u
        e_mu, e_lam, e_b = self.assembler.element_energies(u)
        mat = self.problem.material
        if mat.mode == "stokes":
            value = dissipated_energy(system.full_matrix, u)
            dphys = 0.5 * self.problem.penalty.dalpha(phys) * e_b
        else:
            value = compliance(system.loads, u)
            pm, pl = mat.exponent_mu, mat.exponent_lambda
            dphys = -(pm * phys ** (pm - 1) * e_mu + pl * phys ** (pl - 1) * e_lam)
        dphys[self.mask] = 0.0
        return value, self.filter.chain(dphys), u


def objective_and_sensitivity(evaluator: Evaluator, raw):
    value, grad, _ = evaluator.objective(raw)
    return value, grad


def run_optimization(problem: ProblemDefinition, options: OptimizerOptions | None = None,
                     mesh: PolygonalMesh | None = None, initial_raw=None) -> OptimizationState:
    """Run the loop until max |change of raw design| < tol or the iteration cap.

    Errors from the solver or the update propagate with the last evaluated
    state attached as ``exc.state``.
    """
    options = options or OptimizerOptions()
    mesh = mesh if mesh is not None else problem.build_mesh()
    factor = options.r_min_factor if options.r_min_factor is not None else problem.r_min_factor
    filt = build_filter(mesh, factor * mesh.mean_size)
    ev = Evaluator(mesh, problem, filt)
    n = mesh.n_elements
    design = DensityField.initial(n, problem.volume_fraction, ev.mask, problem.rho_min)
    if initial_raw is not None:
        design.raw = np.asarray(initial_raw, dtype=float).copy()
        design.raw[ev.mask] = ev.frozen[ev.mask]
    design.refilter(filt)
    free = ~ev.mask
    if options.method == "oc" and problem.objective != "compliance":
        raise ValueError("the OC update is only available for compliance problems")
    mma = MMAState(n=int(free.sum()), move=options.move)
    state = OptimizationState(0, design, np.nan, np.nan, np.nan, mma)
    t0 = time.perf_counter()
    for it in range(options.max_iters + 1):
        try:
            if _iterate(it, state, ev, problem, options, free, mma, t0):
                break
        except VemTopoError as exc:
            # the state still holds the last fully evaluated iterate
            state.error = str(exc)
            exc.state = state
            logger.error("iteration %d failed: %s", it, exc)
            raise
    return state


def _iterate(it, state, ev, problem, options, free, mma, t0) -> bool:
    """Evaluate the current design, record it and update it; True when finished."""
    design = state.design
    raw = design.raw
    value, grad, u = ev.objective(raw)
    vol, dvol = ev.volume(raw)
    change = state.change if it > 0 else np.nan
    design.physical = ev.physical(raw)
    state.iteration, state.objective, state.volume = it, value, vol
    state.change, state.displacement = change, u
    state.history.append(HistoryRecord(it, value, vol, change, time.perf_counter() - t0))
    logger.info("it %3d  obj %.6e  vol %.4f  change %.4f", it, value, vol, change)
    if options.callback is not None:
        options.callback(state)
    x = raw[free]
    stationary = (_box_stationary(x, grad[free], problem.rho_min, 1.0)
                  and vol <= problem.volume_fraction + STATIONARY_VOLUME_TOL)
    if (it > 0 and change < options.tol) or stationary:
        state.converged = True
        return True
    if it == options.max_iters:
        return True
    if state.scale is None:
        state.scale = abs(value) if value != 0 else 1.0
    if options.method == "mma":
        g = np.array([vol / problem.volume_fraction - 1.0])
        dg = (dvol[free] / problem.volume_fraction)[None, :]
        xnew = mma_update(mma, x, problem.rho_min, 1.0, grad[free] / state.scale, g, dg)
    else:
        def volume_of(xc):
            full = raw.copy()
            full[free] = xc
            v, dv = ev.volume(full)
            return v, dv[free]

        xnew = oc_update(x, grad[free], volume_of, problem.volume_fraction, problem.rho_min)
    xnew = np.clip(xnew, problem.rho_min, 1.0)
    state.change = float(np.max(np.abs(xnew - x))) if x.size else 0.0
    new_raw = raw.copy()
    new_raw[free] = xnew
    design.raw = new_raw
    return False


def _box_stationary(x, grad, xmin, xmax) -> bool:
    """Projected gradient is zero: every variable sits on the bound its gradient pushes into."""
    return bool(np.all(((x >= xmax) & (grad <= 0)) | ((x <= xmin) & (grad >= 0)) | (grad == 0)))


def history_rows(history) -> list:
    return [[r.iter, r.objective, r.volume, r.change, r.seconds] for r in history]
