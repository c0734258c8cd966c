"""Coefficient partials along a solved trajectory, one time step at a time."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from jumpsnakes.base.noise import NoiseBundle
from jumpsnakes.base.regression import Regressor
from jumpsnakes.fbsolve.picard import FBSDEPSolution
from jumpsnakes.fbsolve.processes import point_at
from jumpsnakes.model.coefficients import CoefficientSnapshot, TrajectoryPoint, snapshot
from jumpsnakes.model.problem import Problem

logger: logging.Logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepPartials:
    """Snapshots of b, sigma, f and g at the left endpoint of one step, shaped (…, paths, marks)."""

    point: TrajectoryPoint
    b: CoefficientSnapshot
    sigma: CoefficientSnapshot
    f: CoefficientSnapshot
    g: CoefficientSnapshot

    def hamiltonian_gradient(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """H_x, H_y, H_z, H_zt with H = g + p b + q sigma."""
        return self.g.grad + p * self.b.grad + q * self.sigma.grad

    def hamiltonian_hessian(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        return self.g.hess + p * self.b.hess + q * self.sigma.hess


def step_partials(problem: Problem, sol: FBSDEPSolution, noise: NoiseBundle, k: int, control: Optional[np.ndarray] = None) -> StepPartials:
    coefs = problem.coefficients
    point = point_at(noise, k, sol.X, sol.triple(), sol.control if control is None else control)
    return StepPartials(
        point=point,
        b=snapshot(coefs.b, point),
        sigma=snapshot(coefs.sigma, point),
        f=snapshot(coefs.f, point),
        g=snapshot(coefs.g, point),
    )


def _project(values: np.ndarray, reg: Regressor) -> np.ndarray:
    # (..., n, m) -> (n, ...*m) columns, regressed, and back
    moved = np.moveaxis(values, -2, 0)
    flat = moved.reshape(moved.shape[0], -1)
    fitted = reg.fit(flat).reshape(moved.shape)
    return np.moveaxis(fitted, 0, -2)


def project_jump_partials(partials: StepPartials, reg: Regressor) -> StepPartials:
    """Replace the partials of f by their regression onto the predictable state.

    This is the Monte Carlo stand-in for the conditional expectation given the predictable
    sigma-field times the mark sigma-field; it is an approximation.
    """
    f = partials.f
    hess = _project(f.hess, reg) if np.any(f.hess) else f.hess
    projected = CoefficientSnapshot(value=f.value, grad=_project(f.grad, reg), hess=hess)
    return replace(partials, f=projected)
