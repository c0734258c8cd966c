"""Hamiltonians of the maximum principle: H = g + p b + q sigma and its z-shifted form.

All functions work on arrays broadcastable to (paths, marks): scalar-per-path quantities
(p, P, u) come as (n, 1) columns, q and the coefficient values as (n, m).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from jumpsnakes.adjoint.kalgebra import EPS_DEN, guard_denominator
from jumpsnakes.adjoint.partials import StepPartials
from jumpsnakes.base.exceptions import FixedPointError
from jumpsnakes.model.coefficients import Coefficient, Coefficients, TrajectoryPoint

logger: logging.Logger = logging.getLogger(__name__)

DELTA_TOL: float = 1e-12
DELTA_MAX_ITER: int = 50


# 🌟 - Spike shift
def delta_fixed_point(sigma: Coefficient, point: TrajectoryPoint, u: Any, p: Any, *, tol: float = DELTA_TOL, max_iter: int = DELTA_MAX_ITER) -> np.ndarray:
    """Solve Delta = p (sigma(z + Delta, u) - sigma(z, u_bar)) by damped iteration.

    The reference control is the one stored in `point`. Iteration starts from the z-frozen
    increment p * (sigma(z, u) - sigma(z, u_bar)); the step is halved wherever the residual
    fails to decrease.
    """
    p = np.asarray(p, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    sigma_bar = sigma.value(*point.args())

    def image(delta: np.ndarray) -> np.ndarray:
        return p * (sigma.value(*point.args(z=point.z + delta, u=u)) - sigma_bar)

    delta = image(np.zeros(np.broadcast_shapes(np.shape(sigma_bar), np.shape(p))))
    damping = np.ones_like(delta)
    residual = image(delta) - delta
    size = np.abs(residual)
    for _ in range(max_iter):
        if np.all(size <= tol * (1.0 + np.abs(delta))):
            return delta
        candidate = delta + damping * residual
        new_residual = image(candidate) - candidate
        new_size = np.abs(new_residual)
        worse = new_size >= size
        damping = np.where(worse, 0.5 * damping, damping)
        delta = np.where(worse, delta, candidate)
        residual = np.where(worse, residual, new_residual)
        size = np.where(worse, size, new_size)
    if np.all(size <= tol * (1.0 + np.abs(delta))):
        return delta
    slope = float(np.max(np.abs(p * sigma.gradient(*point.args(z=point.z + delta, u=u))[2])))
    raise FixedPointError(
        f"Spike shift fixed point did not converge in {max_iter} iterations at t={point.t:.6g} "
        f"(max residual {float(np.max(size)):.3e}, |p * sigma_z| up to {slope:.3g})"
    )


# -
def hamiltonian_H(coefs: Coefficients, point: TrajectoryPoint, p: Any, q: Any, *, z: Optional[np.ndarray] = None, u: Optional[np.ndarray] = None) -> np.ndarray:
    """H = g + p b + q sigma at the point, optionally with z or u replaced."""
    args = point.args(z=z, u=u)
    return coefs.g.value(*args) + p * coefs.b.value(*args) + q * coefs.sigma.value(*args)


def hamiltonian_partials(coefs: Coefficients, point: TrajectoryPoint, p: Any, q: Any) -> np.ndarray:
    """(H_x, H_y, H_z, H_zt) with H_. = g_. + p b_. + q sigma_."""
    args = point.args()
    return coefs.g.gradient(*args) + p * coefs.b.gradient(*args) + q * coefs.sigma.gradient(*args)


@dataclass(frozen=True)
class HamiltonianDifference:
    """Pieces of the spike expansion at one step: delta H, delta sigma and the shift Delta."""

    delta: np.ndarray
    delta_H: np.ndarray
    delta_sigma: np.ndarray
    delta_b: np.ndarray
    delta_g: np.ndarray

    def second_order_source(self, P: Any) -> np.ndarray:
        """delta H + P (delta sigma)^2 / 2."""
        return self.delta_H + 0.5 * P * self.delta_sigma**2


def delta_H(coefs: Coefficients, point: TrajectoryPoint, u: Any, p: Any, q: Any, delta: Optional[np.ndarray] = None) -> HamiltonianDifference:
    """delta H = [g(z+D, u) - g] + p [b(z+D, u) - b] + q [sigma(z+D, u) - sigma] with D the spike shift."""
    u = np.asarray(u, dtype=np.float64)
    if delta is None:
        delta = delta_fixed_point(coefs.sigma, point, u, p)
    shifted = point.args(z=point.z + delta, u=u)
    base = point.args()
    d_b = coefs.b.value(*shifted) - coefs.b.value(*base)
    d_sigma = coefs.sigma.value(*shifted) - coefs.sigma.value(*base)
    d_g = coefs.g.value(*shifted) - coefs.g.value(*base)
    return HamiltonianDifference(delta=delta, delta_H=d_g + p * d_b + q * d_sigma, delta_sigma=d_sigma, delta_b=d_b, delta_g=d_g)


def script_hamiltonian(coefs: Coefficients, point: TrajectoryPoint, u: Any, p: Any, q: Any, P: Any, delta: Optional[np.ndarray] = None) -> np.ndarray:
    """p b + q sigma + g at (z + Delta, u) plus P (sigma(z + Delta, u) - sigma_bar)^2 / 2."""
    u = np.asarray(u, dtype=np.float64)
    if delta is None:
        delta = delta_fixed_point(coefs.sigma, point, u, p)
    shifted_z = point.z + delta
    sigma_shift = coefs.sigma.value(*point.args(z=shifted_z, u=u)) - coefs.sigma.value(*point.args())
    return hamiltonian_H(coefs, point, p, q, z=shifted_z, u=u) + 0.5 * P * sigma_shift**2


def hamiltonian_gap(coefs: Coefficients, point: TrajectoryPoint, u: Any, p: Any, q: Any, P: Any) -> tuple[np.ndarray, np.ndarray]:
    """(gap, identity error) where gap = script H(u) - script H(u_bar) per (path, mark).

    The identity error compares the gap with delta H + P (delta sigma)^2 / 2.
    """
    u = np.asarray(u, dtype=np.float64)
    delta = delta_fixed_point(coefs.sigma, point, u, p)
    at_u = script_hamiltonian(coefs, point, u, p, q, P, delta)
    at_bar = script_hamiltonian(coefs, point, point.u, p, q, P, np.zeros_like(delta))
    gap = at_u - at_bar
    expansion = delta_H(coefs, point, u, p, q, delta).second_order_source(P)
    return gap, np.abs(gap - expansion) / (1.0 + np.abs(at_bar))


# -
@dataclass(frozen=True)
class YStarLoadings:
    """Coefficients A, B, C of the linear equation for Y* (per path and mark)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray


def ystar_loadings(sp: StepPartials, p: np.ndarray, q: np.ndarray, qt: np.ndarray, eps_den: float = EPS_DEN) -> YStarLoadings:
    """A = H_y + qt f_y + H_z sigma_y p R1 + H_zt f_y m R2,
    B = H_z + H_z sigma_z p R1,
    C = H_zt + qt f_zt + H_z sigma_zt p R1 (1 + R2 f_zt m) + H_zt f_zt m R2.
    """
    H = sp.hamiltonian_gradient(p, q)
    H_y, H_z, H_zt = H[1], H[2], H[3]
    s_y, s_z, s_zt = sp.sigma.grad[1], sp.sigma.grad[2], sp.sigma.grad[3]
    f_y, f_zt = sp.f.grad[1], sp.f.grad[3]
    m = p + qt
    shape = np.shape(H_y)
    den1 = np.broadcast_to(1.0 - s_z * p, shape)
    den2 = np.broadcast_to(1.0 - f_zt * m, shape)
    guard_denominator("1-sigma_z*p", den1, eps_den, sp.point.t)
    guard_denominator("1-f_zt*m", den2, eps_den, sp.point.t)
    R1, R2 = 1.0 / den1, 1.0 / den2
    A = H_y + qt * f_y + H_z * s_y * p * R1 + H_zt * f_y * m * R2
    B = H_z + H_z * s_z * p * R1
    C = H_zt + qt * f_zt + H_z * s_zt * p * R1 * (1.0 + R2 * f_zt * m) + H_zt * f_zt * m * R2
    return YStarLoadings(A=np.broadcast_to(A, shape), B=np.broadcast_to(B, shape), C=np.broadcast_to(C, shape))


def subset_point(point: TrajectoryPoint, rows: Any) -> TrajectoryPoint:
    """The point restricted to a subset of paths."""

    def take(a: np.ndarray) -> np.ndarray:
        a = np.asarray(a)
        return a[rows] if a.ndim >= 2 else a

    return TrajectoryPoint(t=point.t, x=take(point.x), y=take(point.y), z=take(point.z), zt=take(point.zt), u=take(point.u), e=point.e)
