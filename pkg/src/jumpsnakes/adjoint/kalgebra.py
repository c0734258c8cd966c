"""Closed-form K1/K2 and K~1/K~2 algebra of the adjoint equations, with denominator guards."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from jumpsnakes.base.exceptions import GuardViolation, SingularityError

logger: logging.Logger = logging.getLogger(__name__)

EPS_DEN: float = 1e-8
_MAX_REPORTED = 1000

# gradient / Hessian rows used by the jump coefficient (it has no z argument)
_F_ROWS = (0, 1, 3)


def guard_denominator(name: str, denominator: np.ndarray, eps_den: float, t: float) -> None:
    """Raise when |denominator| <= eps_den anywhere; locations are (path, mark) of 2-D arrays."""
    bad = np.abs(denominator) <= eps_den
    if not np.any(bad):
        return
    violations: list[GuardViolation] = []
    if denominator.ndim == 2:
        for path, mark in np.argwhere(bad)[:_MAX_REPORTED]:
            violations.append(GuardViolation(t=t, path=int(path), mark=int(mark), guard_name=name, value=float(denominator[path, mark])))
    else:
        flat = np.atleast_1d(denominator)
        for idx in np.flatnonzero(np.atleast_1d(bad))[:_MAX_REPORTED]:
            violations.append(GuardViolation(t=t, path=-1, mark=int(idx) if flat.size > 1 else -1, guard_name=name, value=float(flat[idx])))
    first = violations[0]
    raise SingularityError(
        f"Guard {name} failed at {int(np.sum(bad))} location(s); first at t={first.t:.6g}, path {first.path}, "
        f"mark {first.mark}: |{name}| = {abs(first.value):.3e} <= {eps_den:.1e}",
        violations=violations,
    )


# 🌟 - K1/K2
def k_algebra(p: Any, q: Any, qt: Any, sigma_grad: np.ndarray, f_grad: np.ndarray, eps_den: float = EPS_DEN, *, t: float = math.nan) -> tuple[np.ndarray, np.ndarray]:
    """K2 then K1 from the first-order adjoint values and the partials of sigma and f.

    K2 = (f_x p + f_y p^2 + f_x qt + f_y p qt + qt) / (1 - f_zt (p + qt))
    K1 = (sigma_x p + sigma_y p^2 + sigma_zt p K2 + q) / (1 - sigma_z p)

    `sigma_grad` and `f_grad` stack the partials in (x, y, z, zt) on their first axis.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    qt = np.asarray(qt, dtype=np.float64)
    s_x, s_y, s_z, s_zt = sigma_grad
    f_x, f_y, _, f_zt = f_grad

    den2 = np.asarray(1.0 - f_zt * (p + qt))
    guard_denominator("1-f_zt*(p+qt)", np.broadcast_to(den2, np.broadcast_shapes(den2.shape, q.shape)), eps_den, t)
    K2 = (f_x * p + f_y * p * p + f_x * qt + f_y * p * qt + qt) / den2

    den1 = np.asarray(1.0 - s_z * p)
    guard_denominator("1-sigma_z*p", np.broadcast_to(den1, np.broadcast_shapes(den1.shape, q.shape)), eps_den, t)
    K1 = (s_x * p + s_y * p * p + s_zt * p * K2 + q) / den1
    return K1, K2


def k_algebra_residuals(p: Any, q: Any, qt: Any, K1: Any, K2: Any, sigma_grad: np.ndarray, f_grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Residuals of the linear system that K1, K2 solve before the divisions."""
    s_x, s_y, s_z, s_zt = sigma_grad
    f_x, f_y, _, f_zt = f_grad
    r1 = s_x * p + s_y * p * p + s_z * p * K1 + s_zt * p * K2 + q - K1
    r2 = f_x * p + f_y * p * p + f_zt * p * K2 + f_x * qt + f_y * p * qt + f_zt * qt * K2 + qt - K2
    return np.asarray(r1), np.asarray(r2)


def xi_first(p: np.ndarray, K1: np.ndarray, K2: np.ndarray) -> np.ndarray:
    """Xi1 = [1, p, K1, K2], stacked on a leading axis."""
    shape = np.broadcast_shapes(np.shape(p), np.shape(K1), np.shape(K2))
    return np.stack([np.ones(shape), np.broadcast_to(p, shape), np.broadcast_to(K1, shape), np.broadcast_to(K2, shape)])


def quadratic_form(xi: np.ndarray, hessian: np.ndarray) -> np.ndarray:
    return np.einsum("i...,ij...,j...->...", xi, hessian, xi)


def directional(grad: np.ndarray, xi: np.ndarray) -> np.ndarray:
    return np.einsum("i...,i...->...", grad, xi)


# -
@dataclass(frozen=True)
class SecondOrderTerms:
    """Per (path, mark) quantities of the second-order adjoint driver at one step."""

    Kt1: np.ndarray
    Kt2: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    m: np.ndarray
    n: np.ndarray
    sigma_xi: np.ndarray  # D sigma . Xi1
    b_xi: np.ndarray  # D b . Xi1
    f_xi: np.ndarray  # D f . Xi2
    sigma_quad: np.ndarray  # Xi1 D^2 sigma Xi1
    f_quad: np.ndarray  # Xi2 D^2 f Xi2


def second_order_k_algebra(
    p: np.ndarray,
    qt: np.ndarray,
    K1: np.ndarray,
    K2: np.ndarray,
    P: np.ndarray,
    Q: np.ndarray,
    Qt: np.ndarray,
    sigma_grad: np.ndarray,
    sigma_hess: np.ndarray,
    b_grad: np.ndarray,
    f_grad: np.ndarray,
    f_hess: np.ndarray,
    eps_den: float = EPS_DEN,
    *,
    t: float = math.nan,
) -> SecondOrderTerms:
    """K~2 first via R2 and (m, n), then K~1 via R1.

    K~2 = R2 (f_y m P + m Xi2 D^2f Xi2 + 2 n Df.Xi2 + n (Df.Xi2)^2 + Q~)
    K~1 = R1 (p sigma_y P + 2 (Dsigma.Xi1) P + Q + p Xi1 D^2sigma Xi1 + sigma_zt p K~2)
    with R1 = 1/(1 - sigma_z p), R2 = 1/(1 - f_zt m), m = p + q~, n = P + Q~.
    """
    xi1 = xi_first(p, K1, K2)
    xi2 = xi1[list(_F_ROWS)]
    f_grad2 = f_grad[list(_F_ROWS)]
    f_hess2 = f_hess[np.ix_(_F_ROWS, _F_ROWS)]

    m = p + qt
    n = P + Qt
    den2 = np.asarray(1.0 - f_grad[3] * m)
    den1 = np.asarray(1.0 - sigma_grad[2] * p)
    shape = np.shape(xi1[0])
    guard_denominator("1-f_zt*m", np.broadcast_to(den2, shape), eps_den, t)
    guard_denominator("1-sigma_z*p", np.broadcast_to(den1, shape), eps_den, t)
    R2 = 1.0 / den2
    R1 = 1.0 / den1

    f_xi = directional(f_grad2, xi2)
    f_quad = quadratic_form(xi2, f_hess2)
    sigma_xi = directional(sigma_grad, xi1)
    sigma_quad = quadratic_form(xi1, sigma_hess)
    b_xi = directional(b_grad, xi1)

    Kt2 = R2 * (f_grad[1] * m * P + m * f_quad + 2.0 * n * f_xi + n * f_xi * f_xi + Qt)
    Kt1 = R1 * (p * sigma_grad[1] * P + 2.0 * sigma_xi * P + Q + p * sigma_quad + sigma_grad[3] * p * Kt2)
    return SecondOrderTerms(
        Kt1=Kt1,
        Kt2=Kt2,
        R1=np.broadcast_to(R1, shape),
        R2=np.broadcast_to(R2, shape),
        m=np.broadcast_to(m, shape),
        n=np.broadcast_to(n, shape),
        sigma_xi=sigma_xi,
        b_xi=b_xi,
        f_xi=f_xi,
        sigma_quad=sigma_quad,
        f_quad=f_quad,
    )
