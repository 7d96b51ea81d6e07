import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vemtopo.errors import GeometryError
from vemtopo.vem_elements import (
    MaterialModel,
    PenaltyLaw,
    basis_at,
    element_average_divergence,
    local_elastic_matrices,
    local_stokes_matrices,
    p1_mass_gram,
    polygon_moments,
    projection_pi_eps,
    rigid_modes,
    simp_scale,
)

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
HEXAGON = np.array([[math.cos(a), math.sin(a)] for a in np.linspace(0, 2 * math.pi, 7)[:-1]])
PENTAGON = np.array([[0.0, 0.0], [2.0, 0.1], [2.4, 1.3], [1.0, 2.2], [-0.3, 1.1]])
TRIANGLE = np.array([[0.2, 0.1], [1.3, 0.4], [0.5, 1.6]])
POLYGONS = [SQUARE, HEXAGON, PENTAGON, TRIANGLE]

ELASTIC = MaterialModel(lambda0=1.0, mu0=1.0)
INCOMPRESSIBLE = MaterialModel(lambda0=1e3, mu0=1.0, p_mu=3.0, p_lambda=6.0,
                               mode="nearly_incompressible")


def dofs_of(points, field):
    vals = np.array([field(x, y) for x, y in points], dtype=float)
    return vals.reshape(-1)


def evaluate(poly, coeffs, points):
    return (basis_at(poly, points) @ coeffs).reshape(-1, 2)


@st.composite
def convex_polygons(draw):
    n = draw(st.integers(3, 9))
    jitter = draw(st.lists(st.floats(-0.3, 0.3), min_size=n, max_size=n))
    radii = draw(st.lists(st.floats(0.6, 1.4), min_size=n, max_size=n))
    scale = draw(st.floats(0.01, 10.0))
    shift = draw(st.tuples(st.floats(-5, 5), st.floats(-5, 5)))
    ang = np.sort((np.arange(n) + np.array(jitter)) * 2 * math.pi / n)
    pts = np.column_stack([np.array(radii) * np.cos(ang), np.array(radii) * np.sin(ang)])
    from scipy.spatial import ConvexHull

    hull = ConvexHull(pts)
    pts = pts[hull.vertices]
    return scale * pts + np.array(shift)


def test_constant_field_projects_to_itself():
    for poly in POLYGONS:
        P = projection_pi_eps(poly)
        c = evaluate(poly, P @ dofs_of(poly, lambda x, y: (2.5, -1.5)), poly)
        assert np.allclose(c, [2.5, -1.5], atol=1e-13)


def test_linear_field_reproduced():
    q = lambda x, y: (x + 2 * y, 3 * x - y)
    for poly in POLYGONS:
        P = projection_pi_eps(poly)
        probe = np.array([[0.3, -0.7], [1.1, 0.4], [5.0, 2.0]])
        got = evaluate(poly, P @ dofs_of(poly, q), probe)
        want = np.array([q(x, y) for x, y in probe])
        assert np.allclose(got, want, atol=1e-12)


def _projection_oracle(poly, field, mu, lam):
    """Dense 6x6 system for the energy projection of the edgewise-linear interpolant.

    Rows: vertex-average constraints (2), mean rotation (1) and the energy
    equations against the three strain modes (3). Boundary integrals use
    Gauss quadrature on the linear interpolant of the vertex values.
    """
    n = len(poly)
    vals = np.array([field(x, y) for x, y in poly])
    # centroid and diameter recomputed independently of the package
    a = 0.5 * np.sum(poly[:, 0] * np.roll(poly[:, 1], -1) - np.roll(poly[:, 0], -1) * poly[:, 1])
    cx = np.sum((poly[:, 0] + np.roll(poly[:, 0], -1))
                * (poly[:, 0] * np.roll(poly[:, 1], -1) - np.roll(poly[:, 0], -1) * poly[:, 1])) / (6 * a)
    cy = np.sum((poly[:, 1] + np.roll(poly[:, 1], -1))
                * (poly[:, 0] * np.roll(poly[:, 1], -1) - np.roll(poly[:, 0], -1) * poly[:, 1])) / (6 * a)
    cen = np.array([cx, cy])
    h = max(np.linalg.norm(p - q) for p in poly for q in poly)
    gx, gw = np.polynomial.legendre.leggauss(3)
    # boundary integrals of v (x) n for the interpolant
    vn = np.zeros((2, 2))
    for i in range(n):
        p0, p1 = poly[i], poly[(i + 1) % n]
        v0, v1 = vals[i], vals[(i + 1) % n]
        length = np.linalg.norm(p1 - p0)
        t = (p1 - p0) / length
        nrm = np.array([t[1], -t[0]])
        for s, w in zip(gx, gw):
            lam_s = 0.5 * (s + 1)
            v = (1 - lam_s) * v0 + lam_s * v1
            vn += 0.5 * w * length * np.outer(v, nrm)
    grad = vn / a  # mean gradient
    strain = 0.5 * (grad + grad.T)
    rot = 0.5 * (grad[1, 0] - grad[0, 1])

    def basis(c):
        xi = (c - cen) / h
        return np.array([[1, 0], [0, 1], [-xi[1], xi[0]], [xi[0], 0], [0, xi[1]], [xi[1], xi[0]]])

    eps_q = [np.zeros((2, 2))] * 3 + [np.array([[1, 0], [0, 0]]) / h,
                                      np.array([[0, 0], [0, 1]]) / h,
                                      np.array([[0, 1], [1, 0]]) / h]

    def sigma(e):
        return 2 * mu * e + lam * np.trace(e) * np.eye(2)

    A = np.zeros((6, 6))
    b = np.zeros(6)
    Bv = np.array([basis(c) for c in poly])  # (n, 6, 2)
    A[0] = Bv[:, :, 0].mean(axis=0)
    A[1] = Bv[:, :, 1].mean(axis=0)
    b[0], b[1] = vals[:, 0].mean(), vals[:, 1].mean()
    A[2, 2] = 1.0 / h  # rotation of q2 is 1/h
    b[2] = rot
    for r, j in enumerate((3, 4, 5)):
        for k in range(6):
            A[3 + r, k] = a * np.sum(sigma(eps_q[j]) * eps_q[k])
        b[3 + r] = a * np.sum(sigma(eps_q[j]) * strain)
    return np.linalg.solve(A, b)


def test_projection_of_quadratic_matches_dense_oracle():
    field = lambda x, y: (x * x, 0.0)
    P = projection_pi_eps(SQUARE, ELASTIC)
    got = P @ dofs_of(SQUARE, field)
    oracle = _projection_oracle(SQUARE, field, 1.0, 1.0)
    assert np.allclose(got, oracle, atol=1e-13)
    # frozen values: the interpolant of x^2 on the unit square has trace (x, 0)
    assert np.allclose(got, [0.5, 0.0, 0.0, math.sqrt(2.0), 0.0, 0.0], atol=1e-13)


def test_projection_oracle_on_general_polygon():
    field = lambda x, y: (math.sin(x) + y * y, x * y)
    for poly in (PENTAGON, HEXAGON):
        got = projection_pi_eps(poly) @ dofs_of(poly, field)
        assert np.allclose(got, _projection_oracle(poly, field, 1.0, 0.7), atol=1e-12)


def test_rigid_translations_in_kernel_of_k_mu():
    loc = local_elastic_matrices(SQUARE, MaterialModel(lambda0=0.0, mu0=1.0))
    R = rigid_modes(SQUARE)
    assert np.allclose(loc.K_mu @ R, 0.0, atol=1e-13)


@pytest.mark.parametrize("material", [ELASTIC, INCOMPRESSIBLE])
def test_kernel_is_exactly_rigid_modes(material):
    for poly in POLYGONS:
        K = local_elastic_matrices(poly, material).stiffness
        ev = np.linalg.eigvalsh(K)
        assert np.sum(ev < 1e-12 * np.abs(ev).max()) == 3


def test_constant_strain_energy_unit_square():
    loc = local_elastic_matrices(SQUARE, ELASTIC)
    u = dofs_of(SQUARE, lambda x, y: (x, -y))
    assert 0.5 * u @ loc.stiffness @ u == pytest.approx(2.0, rel=1e-12)


def test_average_divergence_examples():
    for poly in POLYGONS:
        d = element_average_divergence(poly)
        assert d @ dofs_of(poly, lambda x, y: (x, y)) == pytest.approx(2.0, abs=1e-13)
        assert d @ dofs_of(poly, lambda x, y: (-y, x)) == pytest.approx(0.0, abs=1e-13)
    d = element_average_divergence(SQUARE)
    assert d @ dofs_of(SQUARE, lambda x, y: (x * x, 0.0)) == pytest.approx(1.0, abs=1e-14)


def test_k_lambda_is_rank_one_divergence_block():
    loc = local_elastic_matrices(PENTAGON, INCOMPRESSIBLE)
    area = 0.5 * abs(np.sum(PENTAGON[:, 0] * np.roll(PENTAGON[:, 1], -1)
                            - np.roll(PENTAGON[:, 0], -1) * PENTAGON[:, 1]))
    assert np.allclose(loc.K_lambda, 1e3 * area * np.outer(loc.d_vec, loc.d_vec))
    assert np.linalg.matrix_rank(loc.K_lambda) == 1


def test_simp_scale_compressible():
    loc = local_elastic_matrices(HEXAGON, ELASTIC)
    assert np.array_equal(simp_scale(loc, 1.0, ELASTIC), loc.stiffness)
    assert np.allclose(simp_scale(loc, 0.5, ELASTIC), 0.125 * loc.stiffness, rtol=1e-15, atol=0)


def test_simp_scale_split_exponents():
    loc = local_elastic_matrices(HEXAGON, INCOMPRESSIBLE)
    got = simp_scale(loc, 0.5, INCOMPRESSIBLE)
    want = 0.125 * (loc.K_mu + loc.S_eps) + 0.015625 * loc.K_lambda
    assert np.allclose(got, want, rtol=1e-15, atol=1e-15 * np.abs(want).max())


def test_simp_scale_rejects_out_of_range():
    loc = local_elastic_matrices(SQUARE, ELASTIC)
    with pytest.raises(ValueError):
        simp_scale(loc, 1.5, ELASTIC)
    with pytest.raises(ValueError):
        simp_scale(loc, 1e-4, ELASTIC, rho_min=1e-3)


def test_penalty_law_values():
    pen = PenaltyLaw.from_viscosity(1.0)
    assert pen.alpha(1.0) == pytest.approx(2.5e-4, rel=1e-12)
    assert pen.alpha(1e-12) == pytest.approx(2.5e4, rel=1e-9)
    # direct evaluation of the interpolation formula
    assert pen.alpha(0.5) == pytest.approx(2.5e4 + (2.5e-4 - 2.5e4) * 0.5 * 1.1 / 0.6, rel=1e-14)
    assert pen.alpha(0.5) == pytest.approx(2083.3335625, rel=1e-12)


@given(st.floats(0.01, 0.99))
def test_penalty_derivative_matches_difference(rho):
    pen = PenaltyLaw.from_viscosity(1.0)
    h = 1e-6
    fd = (pen.alpha(rho + h) - pen.alpha(rho - h)) / (2 * h)
    assert pen.dalpha(rho) == pytest.approx(fd, rel=1e-6)
    assert pen.dalpha(rho) < 0


def test_stokes_block_is_not_density_scaled():
    mat = MaterialModel(lambda0=1e3, mu0=1.0, mode="stokes")
    pen = PenaltyLaw.from_viscosity(1.0)
    a = local_stokes_matrices(PENTAGON, mat, pen, 0.3)
    b = local_stokes_matrices(PENTAGON, mat, pen, 0.9)
    assert np.array_equal(a.stiffness, b.stiffness)
    assert a.alpha == pytest.approx(float(pen.alpha(0.3)))
    Ka, Kb = simp_scale(a, 0.3, mat), simp_scale(b, 0.9, mat)
    assert np.allclose(Ka - a.stiffness, a.alpha * (a.extra["M0_unit"] + a.extra["S0_unit"]))
    assert np.all(np.linalg.eigvalsh(Ka) > 0)
    assert not np.allclose(Ka, Kb)
    with pytest.raises(ValueError):
        local_stokes_matrices(PENTAGON, mat, pen, 1.2)


def _gram_oracle(poly):
    """Edge-midpoint rule on triangles fanned from vertex 0 (exact for quadratics)."""
    a = 0.5 * np.sum(poly[:, 0] * np.roll(poly[:, 1], -1) - np.roll(poly[:, 0], -1) * poly[:, 1])
    cx = np.sum((poly[:, 0] + np.roll(poly[:, 0], -1))
                * (poly[:, 0] * np.roll(poly[:, 1], -1) - np.roll(poly[:, 0], -1) * poly[:, 1])) / (6 * a)
    cy = np.sum((poly[:, 1] + np.roll(poly[:, 1], -1))
                * (poly[:, 0] * np.roll(poly[:, 1], -1) - np.roll(poly[:, 0], -1) * poly[:, 1])) / (6 * a)
    h = max(np.linalg.norm(p - q) for p in poly for q in poly)
    G = np.zeros((6, 6))
    for i in range(1, len(poly) - 1):
        t = poly[[0, i, i + 1]]
        e1, e2 = t[1] - t[0], t[2] - t[0]
        area = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
        for j, k in ((0, 1), (1, 2), (2, 0)):
            m = 0.5 * (t[j] + t[k])
            xi, eta = (m[0] - cx) / h, (m[1] - cy) / h
            q = np.array([[1, 0], [0, 1], [-eta, xi], [xi, 0], [0, eta], [eta, xi]])
            G += area / 3.0 * q @ q.T
    return G


def test_mass_gram_matches_quadrature_oracle():
    for poly in POLYGONS:
        G = p1_mass_gram(poly)
        assert np.allclose(G, _gram_oracle(poly), rtol=1e-12, atol=1e-14)
        assert G[0, 0] == pytest.approx(polygon_moments(poly)[0])


def test_degenerate_polygon_rejected():
    with pytest.raises(GeometryError):
        local_elastic_matrices(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]), ELASTIC)


@settings(max_examples=60, deadline=None)
@given(convex_polygons())
def test_projection_invariants_random_polygons(poly):
    P = projection_pi_eps(poly)
    D = basis_at(poly, poly)
    # idempotence: projecting the vertex values of a P1^2 field returns its coefficients
    assert np.allclose(P @ D, np.eye(6), atol=1e-12)
    d = element_average_divergence(poly)
    R = rigid_modes(poly)
    assert np.allclose(d @ R, 0.0, atol=1e-12 * max(1.0, np.abs(poly).max()))
    # roundoff grows with the offset of the polygon relative to its size
    spread = np.abs(poly).max() / np.ptp(poly, axis=0).max()
    assert d @ dofs_of(poly, lambda x, y: (x, y)) == pytest.approx(2.0, rel=1e-13 * (1 + spread))


@settings(max_examples=60, deadline=None)
@given(convex_polygons(), st.sampled_from([ELASTIC, INCOMPRESSIBLE]))
def test_stiffness_kernel_and_stability_random_polygons(poly, material):
    loc = local_elastic_matrices(poly, material)
    K = loc.stiffness
    assert np.allclose(K, K.T)
    ev = np.linalg.eigvalsh(K)
    tol = 1e-12 * np.abs(ev).max()
    assert np.sum(ev < tol) == 3
    # stability of the mu block on the complement of rigid modes
    evm = np.linalg.eigvalsh(loc.K_mu + loc.S_eps)
    assert evm[3] > tol
    assert np.allclose(K @ rigid_modes(poly), 0.0, atol=1e-10 * np.abs(K).max() * max(1, np.abs(poly).max()))
