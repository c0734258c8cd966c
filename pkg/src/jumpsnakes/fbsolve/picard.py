"""Picard contraction iteration coupling the forward and backward solves, and the cost J(u) = Y_0."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from jumpsnakes.base.exceptions import ContractionError, InvalidParameterError, NotConvergedError
from jumpsnakes.base.markspace import MarkSpace, integrate_marks
from jumpsnakes.base.noise import NoiseBundle, TimeGrid
from jumpsnakes.base.regression import RegressionConfig
from jumpsnakes.fbsolve.backward import BackwardResult, ProfileFn, solve_backward
from jumpsnakes.fbsolve.forward import simulate_forward
from jumpsnakes.fbsolve.processes import BackwardTriple, point_at
from jumpsnakes.model.coefficients import TrajectoryPoint
from jumpsnakes.model.problem import LipschitzBudget, Problem

logger: logging.Logger = logging.getLogger(__name__)

# Distances growing this many times in a row are declared a contraction failure.
DIVERGENCE_RUN: int = 3

PicardStep = Callable[[BackwardTriple], tuple[np.ndarray, BackwardResult]]


class PicardReport(BaseModel):
    """Convergence diagnostics of the Picard iteration.

    `distances[k]` compares iterate k+1 with iterate k (iterate 0 is the zero triple);
    `ratios[k] = distances[k+1] / distances[k]` where the denominator is positive.
    """

    iterations: int
    converged: bool
    distances: list[float] = Field(default_factory=list)
    ratios: list[Optional[float]] = Field(default_factory=list)
    best_iteration: int = 0
    tol: float = 0.0
    budget: dict[str, float] = Field(default_factory=dict)
    C0: float = 0.0

    @property
    def observed_ratio(self) -> Optional[float]:
        tail = [r for r in self.ratios[1:] if r is not None]
        return max(tail) if tail else None


class PicardConfig(BaseModel):
    """Stopping rule of the Picard iteration.

    `truncate` is the quantile level at which the frozen (y, z, zt) are clipped across paths
    before they drive the forward equation; 0 disables the clipping.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    tol: float = Field(default=1e-6, gt=0.0)
    max_iter: int = Field(default=15, ge=1)
    truncate: float = Field(default=1e-3, ge=0.0, lt=0.5)
    allow_unconverged: bool = False


class CostEstimate(BaseModel):
    value: float
    standard_error: float
    converged: bool


@dataclass(frozen=True)
class FBSDEPSolution:
    """Grid processes X, Y (path, knot) and Z, Zt (path, step, mark) of a solved system."""

    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    Zt: np.ndarray
    Zbar: np.ndarray
    y0_samples: np.ndarray
    control: np.ndarray
    picard: PicardReport
    grid: TimeGrid
    markspace: MarkSpace

    @property
    def Y0(self) -> float:
        return float(np.mean(self.Y[:, 0]))

    @property
    def y0_standard_error(self) -> float:
        n = self.y0_samples.size
        return float(np.std(self.y0_samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0

    def triple(self) -> BackwardTriple:
        return BackwardTriple(y=self.Y, z=self.Z, zt=self.Zt)

    def point(self, noise: NoiseBundle, k: int) -> TrajectoryPoint:
        """Coefficient arguments along this solution at the left endpoint of step k."""
        return point_at(noise, k, self.X, self.triple(), self.control)


def triple_distance(a: BackwardTriple, b: BackwardTriple, ms: MarkSpace, dt: float) -> float:
    """sup_k E|dY_k|^2 + E sum_k dt ||dZ_k||^2 + E sum_k dt ||dZt_k||^2 with L2(nu) norms."""
    dy = float(np.max(np.mean(np.square(a.y - b.y), axis=0)))
    dz = float(np.mean(dt * integrate_marks(ms, np.square(a.z - b.z)).sum(axis=1)))
    dzt = float(np.mean(dt * integrate_marks(ms, np.square(a.zt - b.zt)).sum(axis=1)))
    return dy + dz + dzt


def run_picard(
    step: PicardStep,
    noise: NoiseBundle,
    *,
    tol: float,
    max_iter: int,
    budget: Optional[LipschitzBudget] = None,
    label: str = "state system",
) -> tuple[np.ndarray, BackwardResult, PicardReport]:
    """Iterate `step` from the zero triple until successive triples are closer than `tol`.

    Returns the converged iterate, or the iterate with the smallest distance when `max_iter` runs out.
    """
    if not tol > 0.0:
        raise InvalidParameterError(f"Picard tolerance must be positive, got {tol}")
    if max_iter < 1:
        raise InvalidParameterError(f"max_iter must be at least 1, got {max_iter}")
    ms, dt = noise.markspace, noise.grid.dt
    previous = BackwardTriple.zeros(noise.n_paths, noise.n_steps, ms.size)

    distances: list[float] = []
    best: Optional[tuple[np.ndarray, BackwardResult]] = None
    best_distance = math.inf
    best_iteration = 0
    increases = 0
    converged = False

    for iteration in range(1, max_iter + 1):
        X, result = step(previous)
        current = result.as_triple()
        distance = triple_distance(current, previous, ms, dt)
        distances.append(distance)
        logger.debug(f"{label}: Picard iteration {iteration}, distance {distance:.3e}")

        if distance < best_distance:
            best, best_distance, best_iteration = (X, result), distance, iteration
        increases = increases + 1 if len(distances) > 1 and distance > distances[-2] else 0
        if increases >= DIVERGENCE_RUN:
            raise ContractionError(
                f"{label}: Picard distances increased {increases} times in a row ({', '.join(f'{d:.3e}' for d in distances[-4:])}); "
                f"the contraction condition on the coupling constants (C0) is likely violated"
            )
        previous = current
        if distance < tol:
            converged = True
            best, best_iteration = (X, result), iteration
            break

    ratios = [distances[i + 1] / distances[i] if distances[i] > 0.0 else None for i in range(len(distances) - 1)]
    report = PicardReport(
        iterations=len(distances),
        converged=converged,
        distances=distances,
        ratios=ratios,
        best_iteration=best_iteration,
        tol=tol,
        budget=budget.model_dump() if budget else {},
        C0=budget.C0 if budget else 0.0,
    )
    if not converged:
        logger.warning(f"{label}: no convergence after {max_iter} Picard iterations; returning iteration {best_iteration} (distance {best_distance:.3e})")
    assert best is not None
    return best[0], best[1], report


# 🌟 - Picard solve
def picard_solve(
    problem: Problem,
    control: np.ndarray,
    noise: NoiseBundle,
    cfg: RegressionConfig = RegressionConfig(),
    tol: float = 1e-6,
    max_iter: int = 15,
    *,
    truncate: float = 1e-3,
    z_profile: Optional[ProfileFn] = None,
    settings: Optional[PicardConfig] = None,
) -> FBSDEPSolution:
    """Solve the coupled system for a given control by the Picard iteration on (y, z, zt).

    Each iterate is clipped at its `truncate` quantiles across paths before it is frozen into
    the forward equation. `settings`, when given, replaces `tol`, `max_iter` and `truncate`.
    """
    control = np.asarray(control, dtype=np.float64)
    if settings is not None:
        tol, max_iter, truncate = settings.tol, settings.max_iter, settings.truncate

    def step(frozen: BackwardTriple) -> tuple[np.ndarray, BackwardResult]:
        X = simulate_forward(problem, frozen.truncated(truncate), control, noise)
        return X, solve_backward(problem, X, control, noise, cfg, z_profile=z_profile)

    X, result, report = run_picard(step, noise, tol=tol, max_iter=max_iter, budget=problem.budget, label=problem.name)
    if report.observed_ratio is not None:
        logger.info(f"{problem.name}: observed contraction ratio {report.observed_ratio:.3g} with declared C0 = {problem.C0:.3g}")
    solution = FBSDEPSolution(
        X=X,
        Y=result.Y,
        Z=result.Z,
        Zt=result.Zt,
        Zbar=result.Zbar,
        y0_samples=result.y0_samples,
        control=control,
        picard=report,
        grid=noise.grid,
        markspace=noise.markspace,
    )
    logger.info(f"{problem.name}: Y0 = {solution.Y0:.6g} +/- {solution.y0_standard_error:.2g} after {report.iterations} iterations (converged={report.converged})")
    return solution


def evaluate_cost(sol: FBSDEPSolution, allow_unconverged: bool = False) -> CostEstimate:
    """J(u) = Y_0 as the sample mean of Y at t = 0, with its standard error."""
    if not sol.picard.converged and not allow_unconverged:
        raise NotConvergedError(
            f"Refusing to report a cost from a non-converged solution ({sol.picard.iterations} iterations, "
            f"last distance {sol.picard.distances[-1]:.3e}); pass allow_unconverged=True to override"
        )
    return CostEstimate(value=sol.Y0, standard_error=sol.y0_standard_error, converged=sol.picard.converged)
