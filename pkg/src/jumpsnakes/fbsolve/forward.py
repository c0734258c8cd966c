"""Euler scheme for the forward equation with a frozen backward triple."""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from jumpsnakes.base.exceptions import DimensionError, DivergenceError
from jumpsnakes.base.markspace import integrate_marks
from jumpsnakes.base.noise import NoiseBundle
from jumpsnakes.fbsolve.processes import BackwardTriple, point_at
from jumpsnakes.model.problem import Problem

logger: logging.Logger = logging.getLogger(__name__)


def simulate_forward(problem: Problem, driver: Optional[BackwardTriple], control: np.ndarray, noise: NoiseBundle) -> np.ndarray:
    """Simulate X on every path with (y, z, zt) frozen to `driver` (zero when None).

    X_{k+1} = X_k + dt int b dnu + (int sigma dnu) dW_k + sum_j f_j dN_{k,j} - dt int f dnu.
    Returns an array of shape (n_paths, n_steps + 1) with X_0 = x0.
    """
    n, K, m = noise.n_paths, noise.n_steps, noise.markspace.size
    control = np.asarray(control, dtype=np.float64)
    if control.shape != (n, K):
        raise DimensionError(f"Control has shape {control.shape}, expected {(n, K)}")
    triple = driver if driver is not None else BackwardTriple.zeros(n, K, m)
    if triple.z.shape != (n, K, m) or triple.y.shape != (n, K + 1):
        raise DimensionError(f"Frozen triple shapes {triple.y.shape}/{triple.z.shape} do not match the noise bundle")

    coefs = problem.coefficients
    ms = noise.markspace
    dt = noise.grid.dt
    with_jumps = coefs.has_jumps

    X = np.empty((n, K + 1))
    X[:, 0] = problem.x0
    for k in range(K):
        args = point_at(noise, k, X, triple, control).args()
        x_next = X[:, k] + dt * integrate_marks(ms, coefs.b.value(*args)) + integrate_marks(ms, coefs.sigma.value(*args)) * noise.dW[:, k]
        if with_jumps:
            jump = coefs.f.value(*args)
            x_next += (jump * noise.dN[:, k]).sum(axis=1) - dt * integrate_marks(ms, jump)
        if not np.all(np.isfinite(x_next)):
            path = int(np.flatnonzero(~np.isfinite(x_next))[0])
            raise DivergenceError(f"Forward state became non-finite on path {path} at step {k + 1}", path=path, step=k + 1)
        X[:, k + 1] = x_next
    return X
