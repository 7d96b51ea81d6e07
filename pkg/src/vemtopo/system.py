"""Global assembly, boundary conditions, sparse direct solve and energy functionals."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import norm as sparse_norm
from scipy.sparse.linalg import splu

from vemtopo.errors import SolverError
from vemtopo.mesh.core import PolygonalMesh, element_geometry
from vemtopo.vem_elements import (
    MaterialModel,
    PenaltyLaw,
    brinkman_unit_blocks,
    local_elastic_matrices,
    rigid_modes,
    strain_operator,
)

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
REFINE_STEPS = 3


@dataclass(frozen=True)
class InflowProfile:
    """Parabolic Dirichlet profile g*(1 - (2s/l)^2) on a boundary segment.

    ``s`` is the signed distance from ``center`` along the boundary tangent;
    vertices of ``tag`` with ``|s| > l/2`` get zero velocity.
    """

    tag: str
    direction: tuple[float, float]
    g_star: float
    length: float
    center: tuple[float, float]

    def magnitude(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        s = np.linalg.norm(pts - np.asarray(self.center), axis=1)
        return np.where(s <= 0.5 * self.length, self.g_star * (1.0 - (2.0 * s / self.length) ** 2), 0.0)

    def velocity(self, points: np.ndarray) -> np.ndarray:
        return self.magnitude(points)[:, None] * np.asarray(self.direction, dtype=float)[None, :]

    @property
    def flux(self) -> float:
        """Integral of the magnitude over the segment, 2/3 g* l."""
        return 2.0 / 3.0 * self.g_star * self.length

    def to_dict(self) -> dict:
        return {"tag": self.tag, "direction": list(self.direction), "g_star": self.g_star,
                "length": self.length, "center": list(self.center)}


@dataclass
class BoundaryConditions:
    """Dirichlet data, point loads, uniform edge tractions and inflow profiles.

    ``dirichlet`` and ``loads`` hold ``(vertex, component, value)`` triples.
    ``tractions`` holds ``(tag, (tx, ty))`` pairs; ``nodal_loads`` is an optional
    full-length load vector (e.g. from :func:`body_force_loads`). With ``no_slip`` every
    boundary vertex not covered by a profile or explicit Dirichlet entry is
    held at zero velocity.
    """

    dirichlet: list = field(default_factory=list)
    loads: list = field(default_factory=list)
    tractions: list = field(default_factory=list)
    inflow_profiles: list = field(default_factory=list)
    no_slip: bool = False
    nodal_loads: np.ndarray | None = None  # optional full-length load vector added to ``loads``

    def resolve(self, mesh: PolygonalMesh):
        """Return ``(fixed_dofs, fixed_values, load_vector)``."""
        ndof = 2 * mesh.n_vertices
        fixed: dict = {}
        for prof in self.inflow_profiles:
            vs = mesh.vertices_on_tag(prof.tag)
            vel = prof.velocity(mesh.vertices[vs])
            for v, val in zip(vs, vel):
                fixed[2 * int(v)] = float(val[0])
                fixed[2 * int(v) + 1] = float(val[1])
        for v, c, val in self.dirichlet:
            fixed[2 * int(v) + int(c)] = float(val)
        if self.no_slip:
            for v in mesh.boundary_vertices:
                fixed.setdefault(2 * int(v), 0.0)
                fixed.setdefault(2 * int(v) + 1, 0.0)
        f = np.zeros(ndof)
        load_dofs = set()
        if self.nodal_loads is not None:
            # distributed loads may touch Dirichlet dofs; those entries do no work
            f += np.asarray(self.nodal_loads, dtype=float).ravel()
        for v, c, val in self.loads:
            dof = 2 * int(v) + int(c)
            f[dof] += float(val)
            load_dofs.add(dof)
        for tag, t in self.tractions:
            tag_id = mesh.boundary_names.index(tag) if isinstance(tag, str) else int(tag)
            for e, k, tg in mesh.boundary_edges:
                if tg != tag_id:
                    continue
                poly = mesh.polygons[e]
                a, b = int(poly[k]), int(poly[(k + 1) % len(poly)])
                length = np.linalg.norm(mesh.vertices[b] - mesh.vertices[a])
                for v in (a, b):
                    for c in (0, 1):
                        f[2 * v + c] += 0.5 * length * t[c]
                        load_dofs.add(2 * v + c)
        clash = load_dofs & set(fixed)
        if clash and np.any(f[sorted(clash)] != 0):
            raise ValueError(f"dofs {sorted(clash)[:6]} carry both a load and a Dirichlet value")
        dofs = np.array(sorted(fixed), dtype=np.int64)
        vals = np.array([fixed[d] for d in dofs], dtype=float)
        return dofs, vals, f


def clamp_tag(mesh: PolygonalMesh, tag) -> list:
    """Dirichlet triples fixing both components on every vertex of ``tag``."""
    return [(int(v), c, 0.0) for v in mesh.vertices_on_tag(tag) for c in (0, 1)]


def point_load(mesh: PolygonalMesh, point, force, candidates=None) -> list:
    """Nodal force at the vertex nearest ``point``; the choice is logged."""
    v = mesh.nearest_vertex(point, candidates)
    logger.info("point load at (%g, %g) mapped to vertex %d at (%.6g, %.6g)",
                point[0], point[1], v, *mesh.vertices[v])
    return [(v, c, float(force[c])) for c in (0, 1) if force[c] != 0.0]


class Assembler:
    """Precomputed local blocks and sparsity pattern for one mesh and material.

    Per element it stores ``A_mu = K_mu + S_eps``, ``A_lam = K_lambda`` and, in
    Stokes mode, the unit-alpha Brinkman block ``B = M0_hat + S0_hat``.
    Global matrices for any density vector are produced by a fixed-order
    reduction onto a precomputed CSR pattern.
    """

    def __init__(self, mesh: PolygonalMesh, material: MaterialModel,
                 penalty: PenaltyLaw | None = None):
        if material.mode == "stokes" and penalty is None:
            raise ValueError("Stokes mode needs a PenaltyLaw")
        self.mesh = mesh
        self.material = material
        self.penalty = penalty
        self.n_dofs = 2 * mesh.n_vertices
        groups: dict = {}
        for e, poly in enumerate(mesh.polygons):
            groups.setdefault(len(poly), []).append(e)
        self.groups = []
        rows, cols = [], []
        for n, elems in sorted(groups.items()):
            elems = np.array(elems, dtype=np.int64)
            polys = np.array([mesh.polygons[e] for e in elems])
            dofs = np.empty((len(elems), 2 * n), dtype=np.int64)
            dofs[:, 0::2] = 2 * polys
            dofs[:, 1::2] = 2 * polys + 1
            a_mu = np.empty((len(elems), 2 * n, 2 * n))
            a_lam = np.empty_like(a_mu)
            brink = np.empty_like(a_mu) if material.mode == "stokes" else None
            for i, e in enumerate(elems):
                g = element_geometry(mesh, int(e))
                loc = local_elastic_matrices(g, material)
                a_mu[i] = loc.K_mu + loc.S_eps
                a_lam[i] = loc.K_lambda
                if brink is not None:
                    M, S = brinkman_unit_blocks(g, loc.P_eps, loc.D)
                    brink[i] = M + S
            self.groups.append({"elems": elems, "dofs": dofs, "A_mu": a_mu, "A_lam": a_lam,
                                "B": brink})
            rows.append(np.repeat(dofs, 2 * n, axis=1).ravel())
            cols.append(np.tile(dofs, (1, 2 * n)).ravel())
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        pattern = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.n_dofs,) * 2)
        pattern.sort_indices()
        self._indptr, self._indices = pattern.indptr, pattern.indices
        # position of every COO entry inside the CSR data array
        pos = np.empty(len(rows), dtype=np.int64)
        order = np.lexsort((cols, rows))
        keys = rows[order] * self.n_dofs + cols[order]
        csr_keys = np.repeat(np.arange(self.n_dofs), np.diff(pattern.indptr)) * self.n_dofs + pattern.indices
        pos[order] = np.searchsorted(csr_keys, keys)
        self._pos = pos
        self._nnz = len(pattern.indices)

    @property
    def mode(self) -> str:
        return self.material.mode

    def element_scales(self, rho: np.ndarray):
        """Per-element multipliers for (A_mu, A_lam, B)."""
        rho = np.asarray(rho, dtype=float)
        m = self.material
        if m.mode == "stokes":
            one = np.ones_like(rho)
            return one, one, self.penalty.alpha(rho)
        return rho**m.exponent_mu, rho**m.exponent_lambda, None

    def matrix(self, rho: np.ndarray) -> sp.csr_matrix:
        rho = np.asarray(rho, dtype=float)
        if rho.shape != (self.mesh.n_elements,):
            raise ValueError(f"expected {self.mesh.n_elements} densities, got {rho.shape}")
        s_mu, s_lam, s_b = self.element_scales(rho)
        vals = []
        for g in self.groups:
            el = g["elems"]
            blk = s_mu[el, None, None] * g["A_mu"] + s_lam[el, None, None] * g["A_lam"]
            if s_b is not None:
                blk = blk + s_b[el, None, None] * g["B"]
            vals.append(blk.ravel())
        data = np.bincount(self._pos, weights=np.concatenate(vals), minlength=self._nnz)
        K = sp.csr_matrix((data, self._indices.copy(), self._indptr.copy()),
                          shape=(self.n_dofs, self.n_dofs))
        return K

    def element_energies(self, u: np.ndarray):
        """Per-element quadratic forms ``u_E^T A u_E`` for A_mu, A_lam and B."""
        u = np.asarray(u, dtype=float).ravel()
        ne = self.mesh.n_elements
        e_mu, e_lam = np.zeros(ne), np.zeros(ne)
        e_b = np.zeros(ne) if self.material.mode == "stokes" else None
        for g in self.groups:
            ue = u[g["dofs"]]
            e_mu[g["elems"]] = np.einsum("ei,eij,ej->e", ue, g["A_mu"], ue)
            e_lam[g["elems"]] = np.einsum("ei,eij,ej->e", ue, g["A_lam"], ue)
            if e_b is not None:
                e_b[g["elems"]] = np.einsum("ei,eij,ej->e", ue, g["B"], ue)
        return e_mu, e_lam, e_b


@dataclass
class GlobalSystem:
    stiffness: sp.csr_matrix  # free-free block
    rhs: np.ndarray
    free: np.ndarray
    fixed: np.ndarray
    fixed_values: np.ndarray
    full_matrix: sp.csr_matrix
    loads: np.ndarray
    mode: str = "compressible"
    mesh: PolygonalMesh | None = None

    @property
    def n_dofs(self) -> int:
        return self.full_matrix.shape[0]

    def dof(self, vertex: int, component: int) -> int:
        return 2 * int(vertex) + int(component)


def assemble(assembler: Assembler, densities, bcs: BoundaryConditions) -> GlobalSystem:
    """Global system for the given physical densities with Dirichlet elimination."""
    mesh = assembler.mesh
    rho = np.asarray(densities, dtype=float)
    if np.any(rho < 0) or np.any(rho > 1.0 + 1e-12) or not np.all(np.isfinite(rho)):
        raise ValueError("densities must lie in [0, 1]")
    if assembler.mode == "stokes" and np.any(rho <= 0):
        raise ValueError("Stokes densities must be positive")
    K = assembler.matrix(rho)
    fixed, vals, f = bcs.resolve(mesh)
    is_free = np.ones(assembler.n_dofs, dtype=bool)
    is_free[fixed] = False
    free = np.flatnonzero(is_free)
    Kff = K[free][:, free]
    rhs = f[free] - K[free][:, fixed] @ vals if len(fixed) else f[free].copy()
    return GlobalSystem(Kff.tocsr(), rhs, free, fixed, vals, K, f, assembler.mode, mesh)


def _name_null_mode(coeffs: np.ndarray) -> str:
    names = ("x-translation", "y-translation", "rotation")
    c = coeffs / np.abs(coeffs).max()
    parts = [f"{c[i]:+.3g}*{names[i]}" for i in range(3) if abs(c[i]) > 1e-8]
    return " ".join(parts) if len(parts) > 1 else names[int(np.argmax(np.abs(c)))]


def _check_rigid_modes(system: GlobalSystem) -> None:
    if system.mode == "stokes" or system.mesh is None:
        return
    R = rigid_modes(system.mesh.vertices)
    Rf = R[system.fixed]
    if len(system.fixed):
        _, s, vt = np.linalg.svd(Rf, full_matrices=True)
        s = np.concatenate([s, np.zeros(3 - len(s))])
        tol = 1e-12 * max(s.max(), 1.0)
        null = [vt[i] for i in range(3) if s[i] <= tol]
    else:
        null = list(np.eye(3))
    if null:
        raise SolverError(f"singular system: unconstrained rigid mode ({_name_null_mode(null[0])})")


def solve(system: GlobalSystem) -> np.ndarray:
    """Solve and return the full dof vector reshaped to (n_vertices, 2)."""
    u = np.zeros(system.n_dofs)
    u[system.fixed] = system.fixed_values
    if len(system.free):
        _check_rigid_modes(system)
        try:
            # SPD: symmetric ordering on A^T + A, no pivoting needed
            lu = splu(system.stiffness.tocsc(), permc_spec="MMD_AT_PLUS_A",
                      diag_pivot_thresh=0.0, options={"SymmetricMode": True})
        except RuntimeError as exc:
            raise SolverError(f"factorization failed: {exc}") from None
        x = lu.solve(system.rhs)
        if not np.all(np.isfinite(x)):
            raise SolverError("factorization produced non-finite values")
        scale = max(np.linalg.norm(system.rhs), 1e-300)
        r = system.rhs - system.stiffness @ x
        for _ in range(REFINE_STEPS):
            if np.linalg.norm(r) <= RESIDUAL_TOL * scale:
                break
            x = x + lu.solve(r)
            r = system.rhs - system.stiffness @ x
        # normwise backward error; for lambda0 ~ 1e7 the plain relative residual
        # is bounded below by eps * cond and cannot reach RESIDUAL_TOL
        res = np.linalg.norm(r)
        knorm = sparse_norm(system.stiffness, np.inf)
        backward = res / (knorm * np.linalg.norm(x, np.inf) * np.sqrt(len(x)) + scale)
        if backward > RESIDUAL_TOL:
            logger.warning("linear solve backward error %.3e (relative residual %.3e)",
                           backward, res / scale)
        u[system.free] = x
    return u.reshape(-1, 2)


def compliance(loads: np.ndarray, u: np.ndarray) -> float:
    """Work of the external loads f . u."""
    return float(np.dot(np.ravel(loads), np.ravel(u)))


def dissipated_energy(K: sp.spmatrix, u: np.ndarray) -> float:
    """1/2 u^T K u over all dofs, Dirichlet ones included."""
    u = np.ravel(u)
    return 0.5 * float(u @ (K @ u))


def body_force_loads(mesh: PolygonalMesh, f) -> np.ndarray:
    """Nodal loads from a body force: element mean (centroid value) times |E|, split evenly."""
    loads = np.zeros(2 * mesh.n_vertices)
    fc = np.atleast_2d(f(mesh.centroids))
    for e, poly in enumerate(mesh.polygons):
        share = mesh.areas[e] / len(poly)
        np.add.at(loads, 2 * poly, share * fc[e, 0])
        np.add.at(loads, 2 * poly + 1, share * fc[e, 1])
    return loads


# degree-4 symmetric rule on the reference triangle (barycentric coordinates, weights sum to 1)
_TRI_A, _TRI_B = 0.445948490915965, 0.091576213509771
_TRI_WA, _TRI_WB = 0.223381589678011, 0.109951743655322
_TRI_BARY = np.array([
    [_TRI_A, _TRI_A, 1 - 2 * _TRI_A], [_TRI_A, 1 - 2 * _TRI_A, _TRI_A],
    [1 - 2 * _TRI_A, _TRI_A, _TRI_A], [_TRI_B, _TRI_B, 1 - 2 * _TRI_B],
    [_TRI_B, 1 - 2 * _TRI_B, _TRI_B], [1 - 2 * _TRI_B, _TRI_B, _TRI_B],
])
_TRI_W = np.array([_TRI_WA] * 3 + [_TRI_WB] * 3)


def h1_seminorm_error(mesh: PolygonalMesh, u: np.ndarray, grad_exact) -> tuple[float, float]:
    """(error, exact norm) of the H1 seminorm, comparing grad u with the projected gradient.

    The discrete gradient on each element is the mean gradient of the vertex
    data; the integral uses a degree-4 rule on the centroid fan.
    """
    u = np.ravel(u)
    err2 = norm2 = 0.0
    for e, poly in enumerate(mesh.polygons):
        xy = mesh.vertices[poly]
        ue = np.empty(2 * len(poly))
        ue[0::2], ue[1::2] = u[2 * poly], u[2 * poly + 1]
        B = strain_operator(xy)
        wx, wy = B[0, 0::2], B[1, 1::2]  # d/dx and d/dy weights
        G = np.array([[wx @ ue[0::2], wy @ ue[0::2]], [wx @ ue[1::2], wy @ ue[1::2]]])
        c = mesh.centroids[e]
        nxt = np.roll(xy, -1, axis=0)
        for a, b in zip(xy, nxt):
            area = 0.5 * abs((a[0] - c[0]) * (b[1] - c[1]) - (b[0] - c[0]) * (a[1] - c[1]))
            pts = _TRI_BARY @ np.array([c, a, b])
            ge = grad_exact(pts)  # (m, 2, 2): ge[q, i, j] = d u_i / d x_j
            err2 += area * np.sum(_TRI_W * np.sum((ge - G) ** 2, axis=(1, 2)))
            norm2 += area * np.sum(_TRI_W * np.sum(ge**2, axis=(1, 2)))
    return float(np.sqrt(err2)), float(np.sqrt(norm2))
