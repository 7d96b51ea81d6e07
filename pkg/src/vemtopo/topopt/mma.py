"""Method of Moving Asymptotes (Svanberg 1987) with a primal-dual interior-point subsolver.

The subproblem is the standard form

    min  f0(x) + a0 z + sum_i (c_i y_i + 1/2 d_i y_i^2)
    s.t. f_i(x) - a_i z - y_i <= 0,  alpha <= x <= beta,  y, z >= 0

with f0 and f_i replaced by their asymptote-shifted reciprocal approximations.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from vemtopo.errors import OptimizerError

ASYINIT = 0.5
ASYINCR = 1.2
ASYDECR = 0.7
ALBEFA = 0.1
RAA0 = 1e-5
EPSIMIN = 1e-7
MAX_NEWTON = 200


@dataclass
class MMAState:
    """Asymptotes and the two previous iterates."""

    n: int
    m: int = 1
    move: float = 0.5
    iteration: int = 0
    xold1: np.ndarray | None = None
    xold2: np.ndarray | None = None
    low: np.ndarray | None = None
    upp: np.ndarray | None = None
    a0: float = 1.0
    a: np.ndarray = field(default=None)
    c: np.ndarray = field(default=None)
    d: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.a is None:
            self.a = np.zeros(self.m)
        if self.c is None:
            self.c = np.full(self.m, 1000.0)
        if self.d is None:
            self.d = np.ones(self.m)


def mma_update(state: MMAState, x, xmin, xmax, df0dx, fval, dfdx) -> np.ndarray:
    """One MMA step; updates ``state`` in place and returns the new design.

    ``fval`` (m,) are constraint values (feasible when <= 0), ``dfdx`` (m, n)
    their gradients, ``df0dx`` (n,) the objective gradient.
    """
    x = np.asarray(x, dtype=float)
    xmin = np.broadcast_to(np.asarray(xmin, dtype=float), x.shape)
    xmax = np.broadcast_to(np.asarray(xmax, dtype=float), x.shape)
    df0dx = np.asarray(df0dx, dtype=float)
    fval = np.atleast_1d(np.asarray(fval, dtype=float))
    dfdx = np.atleast_2d(np.asarray(dfdx, dtype=float))
    if not (np.all(np.isfinite(df0dx)) and np.all(np.isfinite(dfdx)) and np.all(np.isfinite(fval))):
        raise OptimizerError("non-finite gradient passed to MMA", iterate={"x": x.copy()})
    state.iteration += 1
    span = xmax - xmin
    if state.iteration <= 2 or state.low is None:
        low = x - ASYINIT * span
        upp = x + ASYINIT * span
    else:
        sign = (x - state.xold1) * (state.xold1 - state.xold2)
        factor = np.ones_like(x)
        factor[sign > 0] = ASYINCR
        factor[sign < 0] = ASYDECR
        low = x - factor * (state.xold1 - state.low)
        upp = x + factor * (state.upp - state.xold1)
        low = np.clip(low, x - 10 * span, x - 0.01 * span)
        upp = np.clip(upp, x + 0.01 * span, x + 10 * span)
    alfa = np.maximum.reduce([low + ALBEFA * (x - low), x - state.move * span, xmin])
    beta = np.minimum.reduce([upp - ALBEFA * (upp - x), x + state.move * span, xmax])
    xmami_inv = 1.0 / np.maximum(span, 1e-5)
    ux1, xl1 = upp - x, x - low
    ux2, xl2 = ux1 * ux1, xl1 * xl1
    p0 = np.maximum(df0dx, 0.0)
    q0 = np.maximum(-df0dx, 0.0)
    pq0 = 0.001 * (p0 + q0) + RAA0 * xmami_inv
    p0 = (p0 + pq0) * ux2
    q0 = (q0 + pq0) * xl2
    P = np.maximum(dfdx, 0.0)
    Q = np.maximum(-dfdx, 0.0)
    PQ = 0.001 * (P + Q) + RAA0 * xmami_inv[None, :]
    P = (P + PQ) * ux2[None, :]
    Q = (Q + PQ) * xl2[None, :]
    b = P @ (1.0 / ux1) + Q @ (1.0 / xl1) - fval
    xnew = subsolve(low, upp, alfa, beta, p0, q0, P, Q, state.a0, state.a, b, state.c, state.d)
    state.xold2 = state.xold1 if state.xold1 is not None else x.copy()
    state.xold1 = x.copy()
    state.low, state.upp = low, upp
    return xnew


def subsolve(low, upp, alfa, beta, p0, q0, P, Q, a0, a, b, c, d) -> np.ndarray:
    """Primal-dual Newton method for the MMA subproblem; returns x."""
    m, n = P.shape
    x = 0.5 * (alfa + beta)
    y = np.ones(m)
    z = 1.0
    lam = np.ones(m)
    xsi = np.maximum(1.0 / (x - alfa), 1.0)
    eta = np.maximum(1.0 / (beta - x), 1.0)
    mu = np.maximum(np.ones(m), 0.5 * c)
    zet = 1.0
    s = np.ones(m)
    epsi = 1.0

    def residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi):
        ux1, xl1 = upp - x, x - low
        plam = p0 + P.T @ lam
        qlam = q0 + Q.T @ lam
        gvec = P @ (1.0 / ux1) + Q @ (1.0 / xl1)
        rex = plam / ux1**2 - qlam / xl1**2 - xsi + eta
        rey = c + d * y - mu - lam
        rez = a0 - zet - a @ lam
        relam = gvec - a * z - y + s - b
        rexsi = xsi * (x - alfa) - epsi
        reeta = eta * (beta - x) - epsi
        remu = mu * y - epsi
        rezet = zet * z - epsi
        res = lam * s - epsi
        return np.concatenate([rex, rey, [rez], relam, rexsi, reeta, remu, [rezet], res])

    while epsi > EPSIMIN:
        r = residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi)
        rnorm, rmax = np.linalg.norm(r), np.abs(r).max()
        it = 0
        while rmax > 0.9 * epsi:
            if it >= MAX_NEWTON:
                raise OptimizerError(
                    f"MMA subproblem did not converge in {MAX_NEWTON} Newton iterations "
                    f"(epsi={epsi:.1e}, residual={rmax:.3e})",
                    iterate={"x": x.copy(), "lam": lam.copy(), "z": z, "y": y.copy()},
                )
            it += 1
            ux1, xl1 = upp - x, x - low
            ux2, xl2 = ux1 * ux1, xl1 * xl1
            ux3, xl3 = ux1 * ux2, xl1 * xl2
            plam = p0 + P.T @ lam
            qlam = q0 + Q.T @ lam
            gvec = P @ (1.0 / ux1) + Q @ (1.0 / xl1)
            GG = P / ux2[None, :] - Q / xl2[None, :]
            dpsidx = plam / ux2 - qlam / xl2
            delx = dpsidx - epsi / (x - alfa) + epsi / (beta - x)
            dely = c + d * y - lam - epsi / y
            delz = a0 - a @ lam - epsi / z
            dellam = gvec - a * z - y - b + epsi / lam
            diagx = 2.0 * (plam / ux3 + qlam / xl3) + xsi / (x - alfa) + eta / (beta - x)
            diagy = d + mu / y
            diaglamyi = s / lam + 1.0 / diagy
            if m < n:
                blam = dellam + dely / diagy - GG @ (delx / diagx)
                Alam = np.diag(diaglamyi) + (GG / diagx[None, :]) @ GG.T
                AA = np.block([[Alam, a[:, None]], [a[None, :], np.array([[-zet / z]])]])
                sol = np.linalg.solve(AA, np.concatenate([blam, [delz]]))
                dlam, dz = sol[:m], sol[m]
                dx = -delx / diagx - (GG.T @ dlam) / diagx
            else:
                dellamyi = dellam + dely / diagy
                Axx = np.diag(diagx) + (GG.T / diaglamyi[None, :]) @ GG
                azz = zet / z + a @ (a / diaglamyi)
                axz = -GG.T @ (a / diaglamyi)
                bx = delx + GG.T @ (dellamyi / diaglamyi)
                bz = delz - a @ (dellamyi / diaglamyi)
                AA = np.block([[Axx, axz[:, None]], [axz[None, :], np.array([[azz]])]])
                sol = np.linalg.solve(AA, -np.concatenate([bx, [bz]]))
                dx, dz = sol[:n], sol[n]
                dlam = (GG @ dx) / diaglamyi - dz * (a / diaglamyi) + dellamyi / diaglamyi
            dy = -dely / diagy + dlam / diagy
            dxsi = -xsi + epsi / (x - alfa) - (xsi * dx) / (x - alfa)
            deta = -eta + epsi / (beta - x) + (eta * dx) / (beta - x)
            dmu = -mu + epsi / y - (mu * dy) / y
            dzet = -zet + epsi / z - zet * dz / z
            ds = -s + epsi / lam - (s * dlam) / lam
            xx = np.concatenate([y, [z], lam, xsi, eta, mu, [zet], s])
            dxx = np.concatenate([dy, [dz], dlam, dxsi, deta, dmu, [dzet], ds])
            stmxx = np.max(-1.01 * dxx / xx)
            stmalfa = np.max(-1.01 * dx / (x - alfa))
            stmbeta = np.max(1.01 * dx / (beta - x))
            step = 1.0 / max(stmxx, stmalfa, stmbeta, 1.0)
            old = (x, y, z, lam, xsi, eta, mu, zet, s)
            new_norm = 2.0 * rnorm
            tries = 0
            while new_norm > rnorm and tries < 50:
                tries += 1
                x = old[0] + step * dx
                y = old[1] + step * dy
                z = old[2] + step * dz
                lam = old[3] + step * dlam
                xsi = old[4] + step * dxsi
                eta = old[5] + step * deta
                mu = old[6] + step * dmu
                zet = old[7] + step * dzet
                s = old[8] + step * ds
                r = residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi)
                new_norm = np.linalg.norm(r)
                step *= 0.5
            rnorm, rmax = new_norm, np.abs(r).max()
        epsi *= 0.1
    return x
