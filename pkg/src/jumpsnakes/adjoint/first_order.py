"""First-order adjoint equation (p, q, q~) solved by the regression backward sweep."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from jumpsnakes.adjoint.kalgebra import EPS_DEN, k_algebra
from jumpsnakes.adjoint.partials import StepPartials, project_jump_partials, step_partials
from jumpsnakes.base.exceptions import BoundednessError, DimensionError, NotConvergedError
from jumpsnakes.base.markspace import integrate_marks
from jumpsnakes.base.noise import NoiseBundle
from jumpsnakes.base.regression import RegressionConfig, Regressor
from jumpsnakes.fbsolve.backward import ProfileFn, backward_sweep
from jumpsnakes.fbsolve.picard import FBSDEPSolution
from jumpsnakes.model.problem import Problem

logger: logging.Logger = logging.getLogger(__name__)


class AdjointConfig(BaseModel):
    """Settings of the adjoint solves."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    eps_den: float = Field(default=EPS_DEN, gt=0.0)
    bound: float = Field(default=1e6, gt=0.0)
    strict_bound: bool = False
    project_jump_partials: bool = True


@dataclass(frozen=True)
class FirstOrderAdjoint:
    """p on knots (path, knot); q, q~, K1, K2 per (path, step, mark)."""

    p: np.ndarray
    q: np.ndarray
    qt: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    qbar: np.ndarray
    p0_samples: np.ndarray
    max_abs_p: float
    bounded: bool
    projected_jump_partials: bool

    @property
    def p0(self) -> float:
        return float(np.mean(self.p[:, 0]))

    def mean_path(self) -> np.ndarray:
        """E[p_t] on every knot."""
        return self.p.mean(axis=0)


def first_order_bracket(sp: StepPartials, p: np.ndarray, q: np.ndarray, qt: np.ndarray, K1: np.ndarray, K2: np.ndarray) -> np.ndarray:
    """The first-order driver per (path, mark), before nu-integration."""
    g_x, g_y, g_z, g_zt = sp.g.grad
    b_x, b_y, b_z, b_zt = sp.b.grad
    s_x, s_y, s_z, s_zt = sp.sigma.grad
    f_x, f_y, _, f_zt = sp.f.grad
    return (
        g_x + g_y * p + g_z * K1 + g_zt * K2
        + b_x * p + b_y * p * p + b_z * K1 * p + b_zt * K2 * p
        + s_x * q + s_y * p * q + s_z * K1 * q + s_zt * K2 * q
        + f_x * qt + f_y * p * qt + f_zt * K2 * qt
    )


def check_bound(p: np.ndarray, adj_cfg: AdjointConfig, label: str) -> tuple[float, bool]:
    max_abs = float(np.max(np.abs(p)))
    bounded = max_abs <= adj_cfg.bound
    if not bounded:
        message = f"{label}: max |{label}| = {max_abs:.3e} exceeds the configured bound {adj_cfg.bound:.1e}"
        if adj_cfg.strict_bound:
            raise BoundednessError(message)
        logger.warning(message)
    return max_abs, bounded


# 🌟 - Solve
def solve_first_order_adjoint(
    problem: Problem,
    sol: FBSDEPSolution,
    control: np.ndarray,
    noise: NoiseBundle,
    cfg: RegressionConfig = RegressionConfig(),
    adj_cfg: AdjointConfig = AdjointConfig(),
    *,
    allow_unconverged: bool = False,
) -> FirstOrderAdjoint:
    """Backward solve of the first-order adjoint along the solution `sol` of the control `control`.

    K1 and K2 are recomputed at every step from the current (p, q, q~) and stored per mark.
    q is spread evenly over marks; K1, K2 are fully mark-resolved.
    """
    if not sol.picard.converged and not allow_unconverged:
        raise NotConvergedError(f"{problem.name}: the first-order adjoint needs a converged state solution")
    control = np.asarray(control, dtype=np.float64)
    if control.shape != (noise.n_paths, noise.n_steps):
        raise DimensionError(f"Control has shape {control.shape}, expected {(noise.n_paths, noise.n_steps)}")

    n, K, m = noise.n_paths, noise.n_steps, noise.markspace.size
    ms = noise.markspace
    K1 = np.zeros((n, K, m))
    K2 = np.zeros((n, K, m))
    current: dict[int, StepPartials] = {}
    if adj_cfg.project_jump_partials and problem.coefficients.has_jumps:
        logger.warning(f"{problem.name}: f-partials replaced by their predictable projection (regression approximation)")

    def prepare(k: int, reg: Regressor) -> None:
        sp = step_partials(problem, sol, noise, k, control)
        if adj_cfg.project_jump_partials and problem.coefficients.has_jumps:
            sp = project_jump_partials(sp, reg)
        current.clear()
        current[k] = sp

    def driver(k: int, p: np.ndarray, q: np.ndarray, qt: np.ndarray) -> np.ndarray:
        sp = current[k]
        pc = p[:, None]
        k1, k2 = k_algebra(pc, q, qt, sp.sigma.grad, sp.f.grad, adj_cfg.eps_den, t=noise.grid.t(k))
        K1[:, k] = k1
        K2[:, k] = k2
        return integrate_marks(ms, first_order_bracket(sp, pc, q, qt, k1, k2))

    terminal = problem.coefficients.phi.dx(sol.X[:, K])
    adjoint_cfg = cfg.model_copy(update={"z_mark_mode": "constant"})
    result = backward_sweep(terminal, sol.X, noise, adjoint_cfg, driver, prepare=prepare, label="p")

    max_abs, bounded = check_bound(result.Y, adj_cfg, "p")
    fo = FirstOrderAdjoint(
        p=result.Y,
        q=result.Z,
        qt=result.Zt,
        K1=K1,
        K2=K2,
        qbar=result.Zbar,
        p0_samples=result.y0_samples,
        max_abs_p=max_abs,
        bounded=bounded,
        projected_jump_partials=adj_cfg.project_jump_partials and problem.coefficients.has_jumps,
    )
    logger.info(f"{problem.name}: p0 = {fo.p0:.6g}, max |p| = {max_abs:.3g}")
    return fo


def k1_profile(fo: FirstOrderAdjoint) -> ProfileFn:
    """Per-mark e-profile for Z taken from K1 of a first-order adjoint."""

    def profile(k: int) -> np.ndarray:
        return fo.K1[:, k]

    return profile


def oracle_deviation(problem: Problem, fo: FirstOrderAdjoint) -> Optional[float]:
    """Max deviation between E[p_t] and the registry's closed-form adjoint, when one exists."""
    if problem.oracle is None or problem.oracle.first_adjoint is None:
        return None
    knots = np.linspace(0.0, problem.T, fo.p.shape[1])
    return float(np.max(np.abs(fo.mean_path() - problem.oracle.first_adjoint(knots))))
