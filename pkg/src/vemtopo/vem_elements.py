"""Low-order (k = 1) virtual element matrices for elasticity and Stokes-Brinkman.

Degrees of freedom are the two velocity/displacement components at each
polygon vertex, interleaved as ``[u1x, u1y, u2x, u2y, ...]``. The local
polynomial space is P1^2 written in the scaled basis

    q0 = (1, 0)   q1 = (0, 1)   q2 = (-eta, xi)
    q3 = (xi, 0)  q4 = (0, eta) q5 = (eta, xi)

with ``xi = (x - xc)/h`` and ``eta = (y - yc)/h``; q0..q2 are the rigid modes
and q3..q5 carry the three constant strains.

Everything is computed from boundary data. For a function whose trace is
linear on every edge, the element average of its gradient is

    (1/|E|) * sum_i v_i (x) w_i,   w_i = 1/2 * (y_{i+1} - y_{i-1}, x_{i-1} - x_{i+1}),

which follows from the divergence theorem and the trapezoid rule on each edge.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from vemtopo.mesh.core import ElementGeometry, polygon_geometry

MODES = ("compressible", "nearly_incompressible", "stokes")


@dataclass(frozen=True)
class MaterialModel:
    """Lamé constants and SIMP exponents.

    ``p`` is used in compressible mode. In nearly-incompressible mode the
    split exponents ``p_mu``/``p_lambda`` apply; they default to ``p``.
    """

    lambda0: float
    mu0: float
    p: float = 3.0
    p_lambda: float | None = None
    p_mu: float | None = None
    mode: str = "compressible"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if not self.mu0 > 0:
            raise ValueError("mu0 must be positive")
        if not self.lambda0 >= 0:
            raise ValueError("lambda0 must be nonnegative")
        for name in ("p", "p_lambda", "p_mu"):
            val = getattr(self, name)
            if val is not None and val < 1:
                raise ValueError(f"{name} must be >= 1")

    @classmethod
    def from_young_poisson(cls, E: float, nu: float, **kwargs) -> "MaterialModel":
        """Plane-strain Lamé constants from Young's modulus and Poisson's ratio."""
        if not (E > 0 and -1.0 < nu < 0.5):
            raise ValueError("need E > 0 and -1 < nu < 0.5")
        lam = E * nu / ((1 + nu) * (1 - 2 * nu))
        mu = E / (2 * (1 + nu))
        return cls(lambda0=lam, mu0=mu, **kwargs)

    @property
    def exponent_mu(self) -> float:
        if self.mode == "nearly_incompressible" and self.p_mu is not None:
            return self.p_mu
        return self.p

    @property
    def exponent_lambda(self) -> float:
        if self.mode == "nearly_incompressible" and self.p_lambda is not None:
            return self.p_lambda
        return self.p

    def to_dict(self) -> dict:
        d = {"lambda0": self.lambda0, "mu0": self.mu0, "p": self.p, "mode": self.mode}
        if self.p_lambda is not None:
            d["p_lambda"] = self.p_lambda
        if self.p_mu is not None:
            d["p_mu"] = self.p_mu
        return d


@dataclass(frozen=True)
class PenaltyLaw:
    """Brinkman drag coefficient alpha(rho).

    ``kind="interpolation"``: alpha = a_max + (a_min - a_max) * rho (1 + q) / (rho + q).
    ``kind="inverse_square"``: alpha = coef / rho**2 (coef = 5 mu0 in the original form).
    """

    q: float = 0.1
    alpha_min: float = 2.5e-4
    alpha_max: float = 2.5e4
    kind: str = "interpolation"
    coef: float = 5.0

    def __post_init__(self):
        if self.kind not in ("interpolation", "inverse_square"):
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.kind == "interpolation":
            if not (0 < self.alpha_min < self.alpha_max):
                raise ValueError("need 0 < alpha_min < alpha_max")
            if not self.q > 0:
                raise ValueError("q must be positive")
        elif not self.coef > 0:
            raise ValueError("coef must be positive")

    @classmethod
    def from_viscosity(cls, mu0: float, q: float = 0.1) -> "PenaltyLaw":
        """Drag bounds 2.5 mu0 / 0.01^2 (solid) and 2.5 mu0 / 100^2 (fluid)."""
        return cls(q=q, alpha_min=2.5 * mu0 / 100.0**2, alpha_max=2.5 * mu0 / 0.01**2)

    @classmethod
    def inverse_square(cls, mu0: float) -> "PenaltyLaw":
        return cls(kind="inverse_square", coef=5.0 * mu0)

    def alpha(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.kind == "inverse_square":
            return self.coef / rho**2
        return self.alpha_max + (self.alpha_min - self.alpha_max) * rho * (1 + self.q) / (rho + self.q)

    def dalpha(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.kind == "inverse_square":
            return -2.0 * self.coef / rho**3
        return (self.alpha_min - self.alpha_max) * (1 + self.q) * self.q / (rho + self.q) ** 2

    def to_dict(self) -> dict:
        if self.kind == "inverse_square":
            return {"kind": self.kind, "coef": self.coef}
        return {"kind": self.kind, "q": self.q, "alpha_min": self.alpha_min,
                "alpha_max": self.alpha_max}


@dataclass
class LocalElementMatrices:
    """Per-polygon blocks; SIMP/Brinkman scaling is applied by the caller."""

    K_mu: np.ndarray
    K_lambda: np.ndarray
    S_eps: np.ndarray
    P_eps: np.ndarray  # (6, 2n): dofs -> coefficients in the scaled P1^2 basis
    d_vec: np.ndarray  # (2n,): element-average divergence
    D: np.ndarray  # (2n, 6): basis evaluated at the vertices
    tau: float
    area: float
    M0: np.ndarray | None = None
    S0: np.ndarray | None = None
    alpha: float | None = None
    mode: str = "compressible"
    extra: dict = field(default_factory=dict)

    @property
    def n_dofs(self) -> int:
        return self.K_mu.shape[0]

    @property
    def stiffness(self) -> np.ndarray:
        """Unscaled elastic/viscous matrix K_mu + K_lambda + S_eps."""
        return self.K_mu + self.K_lambda + self.S_eps


def _geometry(poly) -> ElementGeometry:
    if isinstance(poly, ElementGeometry):
        return poly
    return polygon_geometry(np.asarray(poly, dtype=float))


def _boundary_weights(g: ElementGeometry) -> np.ndarray:
    """w_i such that the mean gradient is (1/|E|) sum_i v_i (x) w_i."""
    xy = g.vertices
    nxt, prv = np.roll(xy, -1, axis=0), np.roll(xy, 1, axis=0)
    return 0.5 * np.column_stack([nxt[:, 1] - prv[:, 1], prv[:, 0] - nxt[:, 0]])


def strain_operator(poly) -> np.ndarray:
    """(3, 2n) Voigt operator giving the mean strain (exx, eyy, gamma_xy)."""
    g = _geometry(poly)
    w = _boundary_weights(g) / g.area
    n = g.n
    B = np.zeros((3, 2 * n))
    B[0, 0::2] = w[:, 0]
    B[1, 1::2] = w[:, 1]
    B[2, 0::2] = w[:, 1]
    B[2, 1::2] = w[:, 0]
    return B


def rotation_operator(poly) -> np.ndarray:
    """(2n,) row giving the mean rotation 1/2 (dvy/dx - dvx/dy)."""
    g = _geometry(poly)
    w = _boundary_weights(g) / g.area
    r = np.zeros(2 * g.n)
    r[0::2] = -0.5 * w[:, 1]
    r[1::2] = 0.5 * w[:, 0]
    return r


def element_average_divergence(poly) -> np.ndarray:
    """d_vec with d_vec @ v = (1/|E|) * boundary flux of v (trapezoid per edge)."""
    g = _geometry(poly)
    w = _boundary_weights(g) / g.area
    d = np.zeros(2 * g.n)
    d[0::2] = w[:, 0]
    d[1::2] = w[:, 1]
    return d


def scaled_coordinates(poly, points) -> np.ndarray:
    g = _geometry(poly)
    return (np.atleast_2d(points) - g.centroid) / g.diameter


def basis_at(poly, points) -> np.ndarray:
    """(2m, 6) evaluation of the scaled P1^2 basis at ``points``, interleaved rows."""
    xe = scaled_coordinates(poly, points)
    xi, eta = xe[:, 0], xe[:, 1]
    m = len(xe)
    D = np.zeros((2 * m, 6))
    D[0::2, 0] = 1.0
    D[1::2, 1] = 1.0
    D[0::2, 2] = -eta
    D[1::2, 2] = xi
    D[0::2, 3] = xi
    D[1::2, 4] = eta
    D[0::2, 5] = eta
    D[1::2, 5] = xi
    return D


def projection_pi_eps(poly, material: MaterialModel | None = None) -> np.ndarray:
    """Energy projection onto P1^2 as a (6, 2n) matrix acting on vertex dofs.

    The strain part matches the element-average strain, which is the energy
    projection for any mu0 > 0 (the material only matters through its
    positivity, so ``material`` is validated but does not change the result).
    Translations are fixed by equal vertex averages and the rotation by the
    element-average rotation computed from the boundary.
    """
    if material is not None and not material.mu0 > 0:
        raise ValueError("projection needs mu0 > 0")
    g = _geometry(poly)
    h, n = g.diameter, g.n
    B = strain_operator(g)
    P = np.zeros((6, 2 * n))
    P[3] = h * B[0]
    P[4] = h * B[1]
    P[5] = 0.5 * h * B[2]
    P[2] = h * rotation_operator(g)
    xe = scaled_coordinates(g, g.vertices)
    mxi, meta = xe[:, 0].mean(), xe[:, 1].mean()
    avg_x = np.zeros(2 * n)
    avg_y = np.zeros(2 * n)
    avg_x[0::2] = 1.0 / n
    avg_y[1::2] = 1.0 / n
    # vertex average of q2..q5 must be removed from the translation coefficients
    P[0] = avg_x + meta * P[2] - mxi * P[3] - meta * P[5]
    P[1] = avg_y - mxi * P[2] - meta * P[4] - mxi * P[5]
    return P


def _stabilization_projector(P: np.ndarray, D: np.ndarray) -> np.ndarray:
    R = np.eye(P.shape[1]) - D @ P
    return R.T @ R


def local_elastic_matrices(poly, material: MaterialModel) -> LocalElementMatrices:
    """Consistency, div-div and stabilization blocks for one polygon."""
    g = _geometry(poly)
    P = projection_pi_eps(g, material)
    D = basis_at(g, g.vertices)
    B = strain_operator(g)
    d = element_average_divergence(g)
    mu, lam = material.mu0, material.lambda0
    K_mu = g.area * B.T @ (np.array([2 * mu, 2 * mu, mu])[:, None] * B)
    K_lambda = lam * g.area * np.outer(d, d)
    trace = np.trace(K_mu)
    if material.mode == "compressible":
        trace += np.trace(K_lambda)
    tau = 0.5 * trace / (2 * g.n)
    S = tau * _stabilization_projector(P, D)
    return LocalElementMatrices(
        K_mu=_sym(K_mu), K_lambda=_sym(K_lambda), S_eps=_sym(S), P_eps=P, d_vec=d, D=D,
        tau=tau, area=g.area, mode=material.mode,
    )


def polygon_moments(poly) -> np.ndarray:
    """Integrals of 1, xi, eta, xi^2, xi*eta, eta^2 over the polygon (scaled coordinates)."""
    g = _geometry(poly)
    a = (g.vertices - g.centroid) / g.diameter
    b = np.roll(a, -1, axis=0)
    t = 0.5 * (a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1])  # fan triangles from the centroid
    ax, ay, bx, by = a[:, 0], a[:, 1], b[:, 0], b[:, 1]
    h2 = g.diameter**2
    return h2 * np.array([
        t.sum(),
        np.sum(t * (ax + bx)) / 3.0,
        np.sum(t * (ay + by)) / 3.0,
        np.sum(t * (ax * ax + bx * bx + ax * bx)) / 6.0,
        np.sum(t * (2 * ax * ay + 2 * bx * by + ax * by + bx * ay)) / 12.0,
        np.sum(t * (ay * ay + by * by + ay * by)) / 6.0,
    ])


def p1_mass_gram(poly) -> np.ndarray:
    """(6, 6) matrix of integrals of q_i . q_j over the polygon."""
    m = polygon_moments(poly)
    one, xi, eta, xx, xy, yy = m
    # components as linear forms c0 + c1*xi + c2*eta
    comps = np.array([
        [[1, 0, 0], [0, 0, 0]],
        [[0, 0, 0], [1, 0, 0]],
        [[0, 0, -1], [0, 1, 0]],
        [[0, 1, 0], [0, 0, 0]],
        [[0, 0, 0], [0, 0, 1]],
        [[0, 0, 1], [0, 1, 0]],
    ], dtype=float)
    mom = np.array([[one, xi, eta], [xi, xx, xy], [eta, xy, yy]])
    G = np.einsum("ika,ab,jkb->ij", comps, mom, comps)
    return _sym(G)


def brinkman_unit_blocks(poly, P: np.ndarray | None = None, D: np.ndarray | None = None):
    """Unit-alpha Brinkman blocks (M0_hat, S0_hat)."""
    g = _geometry(poly)
    if P is None:
        P = projection_pi_eps(g)
    if D is None:
        D = basis_at(g, g.vertices)
    M = P.T @ p1_mass_gram(g) @ P
    S = g.area * _stabilization_projector(P, D)
    return _sym(M), _sym(S)


def local_stokes_matrices(poly, material: MaterialModel, penalty: PenaltyLaw,
                          rho_E: float, rho_min: float = 0.0) -> LocalElementMatrices:
    """Viscous + grad-div blocks (unscaled) and the Brinkman blocks at alpha(rho_E)."""
    if not (rho_min <= rho_E <= 1.0) or rho_E <= 0:
        raise ValueError(f"density {rho_E} outside ({max(rho_min, 0)}, 1]")
    stokes_mat = material if material.mode == "stokes" else MaterialModel(
        material.lambda0, material.mu0, material.p, material.p_lambda, material.p_mu, "stokes")
    g = _geometry(poly)
    loc = local_elastic_matrices(g, stokes_mat)
    M, S = brinkman_unit_blocks(g, loc.P_eps, loc.D)
    a = float(penalty.alpha(rho_E))
    loc.M0, loc.S0, loc.alpha = a * M, a * S, a
    loc.extra["M0_unit"], loc.extra["S0_unit"] = M, S
    return loc


def simp_scale(local: LocalElementMatrices, rho_E: float, material: MaterialModel,
               rho_min: float = 0.0) -> np.ndarray:
    """Density-scaled local matrix."""
    if not (rho_min <= rho_E <= 1.0) or rho_E < 0:
        raise ValueError(f"density {rho_E} outside [{rho_min}, 1]")
    if material.mode == "stokes":
        out = local.stiffness.copy()
        if local.M0 is not None:
            out += local.M0 + local.S0
        return out
    if material.mode == "compressible":
        return rho_E**material.p * local.stiffness
    return (rho_E**material.exponent_mu * (local.K_mu + local.S_eps)
            + rho_E**material.exponent_lambda * local.K_lambda)


def rigid_modes(points: np.ndarray) -> np.ndarray:
    """(2n, 3) vertex evaluation of the two translations and the rotation (-y, x)."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    R = np.zeros((2 * n, 3))
    R[0::2, 0] = 1.0
    R[1::2, 1] = 1.0
    R[0::2, 2] = -pts[:, 1]
    R[1::2, 2] = pts[:, 0]
    return R


def _sym(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)


def plane_strain_lame(E: float, nu: float) -> tuple[float, float]:
    """(lambda, mu) for plane strain."""
    m = MaterialModel.from_young_poisson(E, nu)
    return m.lambda0, m.mu0


__all__ = [
    "MODES", "MaterialModel", "PenaltyLaw", "LocalElementMatrices", "strain_operator",
    "rotation_operator", "element_average_divergence", "scaled_coordinates", "basis_at",
    "projection_pi_eps", "local_elastic_matrices", "polygon_moments", "p1_mass_gram",
    "brinkman_unit_blocks", "local_stokes_matrices", "simp_scale", "rigid_modes",
    "plane_strain_lame",
]
