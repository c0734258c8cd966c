"""Least-squares Monte Carlo backward sweep for BSDEs driven by W and the compensated jump measure."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from jumpsnakes.base.exceptions import ConfigurationError, DivergenceError, ImplicitStepError
from jumpsnakes.base.markspace import integrate_marks
from jumpsnakes.base.noise import NoiseBundle
from jumpsnakes.base.regression import RegressionConfig, Regressor, polynomial_features
from jumpsnakes.fbsolve.processes import BackwardTriple
from jumpsnakes.model.problem import Problem

logger: logging.Logger = logging.getLogger(__name__)

# (k, y (n,), z (n, m), zt (n, m)) -> nu-integrated driver (n,)
DriverFn = Callable[[int, np.ndarray, np.ndarray, np.ndarray], np.ndarray]
# (k, regressor) -> None, called once per step before the implicit iteration
PrepareFn = Callable[[int, Regressor], None]
# k -> (n, m) e-profile used to spread Zbar over marks
ProfileFn = Callable[[int], np.ndarray]


@dataclass(frozen=True)
class BackwardResult:
    """Solution of one backward sweep.

    `y0_samples` are the pathwise values Y_1 + dt * driver_0 whose mean is Y_0 in "centered" mode; their
    spread gives the standard error of Y_0 and of paired differences.
    """

    Y: np.ndarray
    Z: np.ndarray
    Zt: np.ndarray
    Zbar: np.ndarray
    y0_samples: np.ndarray

    def as_triple(self) -> BackwardTriple:
        return BackwardTriple(y=self.Y, z=self.Z, zt=self.Zt)


def _spread_over_marks(zbar: np.ndarray, noise: NoiseBundle, profile: Optional[np.ndarray]) -> np.ndarray:
    ms = noise.markspace
    if profile is None:
        return np.repeat((zbar / ms.total_mass)[:, None], ms.size, axis=1)
    mass = integrate_marks(ms, profile)
    safe = np.abs(mass) > 1e-14
    spread = np.repeat((zbar / ms.total_mass)[:, None], ms.size, axis=1)
    spread[safe] = zbar[safe, None] * profile[safe] / mass[safe, None]
    return spread


def _increment_design(
    local: np.ndarray, dW: np.ndarray, dN: np.ndarray, compensated: np.ndarray
) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Increment columns of one step: dW * local, then compensated_j * local for marks that fired.

    A mark needs more hits than local columns to get the full local profile, otherwise only
    its constant column is used; a mark without hits is left out. A dW-on-jump column is
    appended when both jump and no-jump paths are numerous enough to separate it from dW.
    Returns the design and (mark, width) for every mark block in column order.
    """
    n, cols = local.shape
    blocks = [dW[:, None] * local]
    mark_blocks: list[tuple[int, int]] = []
    for j in range(dN.shape[1]):
        hits = int(np.count_nonzero(dN[:, j]))
        if hits == 0:
            continue
        width = cols if hits > cols + 1 else 1
        blocks.append(compensated[:, j, None] * local[:, :width])
        mark_blocks.append((j, width))
    jumped = np.any(dN > 0, axis=1)
    n_jumped = int(jumped.sum())
    if min(n_jumped, n - n_jumped) > cols + 1:
        blocks.append((dW * jumped)[:, None])
    return np.hstack(blocks), mark_blocks


# 🌟 - Backward sweep
def backward_sweep(
    terminal: np.ndarray,
    state: np.ndarray,
    noise: NoiseBundle,
    cfg: RegressionConfig,
    driver: DriverFn,
    *,
    prepare: Optional[PrepareFn] = None,
    z_profile: Optional[ProfileFn] = None,
    label: str = "Y",
) -> BackwardResult:
    """Solve -dY = driver dt - int Z dnu dW - int Zt dN~ backwards from Y_K = terminal.

    Per step, Y_{k+1} is regressed jointly on the polynomial basis of the state at the left
    endpoint (`state[:, k]`, one or several columns) and on the increments dW_k * local and
    (dN_j - nu_j dt) * local, where local holds 1 and the state monomials up to
    `cfg.martingale_degree`. Zbar and each Zt_j are read off as local profiles from the increment
    coefficients. The fitted martingale part is taken out of Y_{k+1} (keeping its sample mean in
    "centered" mode) and the rest is projected onto the state basis for E_k[Y_{k+1}]. Y_k solves
    Y_k = E_k[Y_{k+1}] + dt * driver(Y_k) by inner fixed point.
    """
    n, K, m = noise.n_paths, noise.n_steps, noise.markspace.size
    dt = noise.grid.dt
    weights = noise.markspace.weights_array
    if cfg.z_mark_mode == "per-mark" and z_profile is None:
        raise ConfigurationError("z_mark_mode = 'per-mark' needs an e-profile (e.g. from a first-order adjoint)")
    profile_fn = z_profile if cfg.z_mark_mode == "per-mark" else None

    Y = np.empty((n, K + 1))
    Z = np.empty((n, K, m))
    Zt = np.zeros((n, K, m))
    Zbar = np.empty((n, K))
    Y[:, K] = terminal
    y0_samples = np.empty(n)

    for k in range(K - 1, -1, -1):
        reg = Regressor(state[:, k], degree=cfg.degree, ridge=cfg.ridge)
        if prepare is not None:
            prepare(k, reg)
        y_next = Y[:, k + 1]
        local = np.column_stack([np.ones(n), polynomial_features(state[:, k], cfg.martingale_degree)])
        dN = noise.dN[:, k]
        design, mark_blocks = _increment_design(local, noise.dW[:, k], dN, dN.astype(np.float64) - weights * dt)
        coef = reg.split(y_next, design)
        cols = local.shape[1]
        Zbar[:, k] = local @ coef[:cols]
        start = cols
        for j, width in mark_blocks:
            Zt[:, k, j] = local[:, :width] @ coef[start : start + width]
            start += width
        Z[:, k] = _spread_over_marks(Zbar[:, k], noise, profile_fn(k) if profile_fn else None)

        martingale = design @ coef
        if cfg.martingale_mode == "centered":
            martingale -= martingale.mean()
        target = y_next - martingale
        y_hat = reg.fit(target)

        y = y_hat
        for _ in range(cfg.implicit_inner_iters):
            y_new = y_hat + dt * driver(k, y, Z[:, k], Zt[:, k])
            if not np.all(np.isfinite(y_new)):
                path = int(np.flatnonzero(~np.isfinite(y_new))[0])
                raise DivergenceError(f"{label} became non-finite on path {path} at step {k}", path=path, step=k)
            change = float(np.max(np.abs(y_new - y)))
            y = y_new
            if change <= cfg.implicit_tol * (1.0 + float(np.max(np.abs(y)))):
                break
        else:
            raise ImplicitStepError(
                f"Implicit step for {label} at step {k} did not converge in {cfg.implicit_inner_iters} "
                f"inner iterations (last change {change:.3e}); try a smaller dt"
            )
        Y[:, k] = y
        if k == 0:
            y0_samples = y_next + dt * driver(0, y, Z[:, 0], Zt[:, 0])

    return BackwardResult(Y=Y, Z=Z, Zt=Zt, Zbar=Zbar, y0_samples=y0_samples)


def solve_backward(
    problem: Problem,
    X: np.ndarray,
    control: np.ndarray,
    noise: NoiseBundle,
    cfg: RegressionConfig = RegressionConfig(),
    *,
    z_profile: Optional[ProfileFn] = None,
) -> BackwardResult:
    """Backward equation -dY = int g dnu dt - ... with Y_T = phi(X_T) along a given forward path set."""
    if not np.all(np.isfinite(X)):
        raise DivergenceError("Forward state passed to the backward solve is not finite")
    coefs = problem.coefficients
    ms = noise.markspace
    K = noise.n_steps
    marks = ms.marks_array

    def driver(k: int, y: np.ndarray, z: np.ndarray, zt: np.ndarray) -> np.ndarray:
        return integrate_marks(ms, coefs.g.value(noise.grid.t(k), X[:, k, None], y[:, None], z, zt, control[:, k, None], marks))

    return backward_sweep(coefs.phi.value(X[:, K]), X, noise, cfg, driver, z_profile=z_profile)
