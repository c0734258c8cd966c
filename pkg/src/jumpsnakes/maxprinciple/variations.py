"""Variational systems of a spike perturbation: (X1, Y1, Z1, Zt1), (X2, Y2), Y* and gamma."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from pydantic import BaseModel

from jumpsnakes.adjoint.first_order import FirstOrderAdjoint
from jumpsnakes.adjoint.kalgebra import EPS_DEN, directional, quadratic_form, xi_first
from jumpsnakes.adjoint.partials import StepPartials, step_partials
from jumpsnakes.adjoint.second_order import SecondOrderAdjoint
from jumpsnakes.base.markspace import integrate_marks
from jumpsnakes.base.noise import NoiseBundle
from jumpsnakes.base.regression import RegressionConfig, Regressor
from jumpsnakes.fbsolve.backward import BackwardResult, backward_sweep
from jumpsnakes.fbsolve.picard import FBSDEPSolution, PicardConfig, PicardReport, run_picard
from jumpsnakes.fbsolve.processes import BackwardTriple
from jumpsnakes.maxprinciple.hamiltonian import delta_H, ystar_loadings
from jumpsnakes.maxprinciple.spike import SpikeConfig, build_spike_control, spike_mask
from jumpsnakes.model.problem import Problem

logger: logging.Logger = logging.getLogger(__name__)

_F_ROWS = [0, 1, 3]


@dataclass(frozen=True)
class VariationProcesses:
    """Variation processes of one spike on (path, knot) or (path, step, mark) grids.

    The first-order part is always present; the second-order part and the Y* equation are
    filled in by `second_variation_simulate`.
    """

    mask: np.ndarray
    control: np.ndarray
    X1: np.ndarray
    Y1: np.ndarray
    Z1: np.ndarray
    Zt1: np.ndarray
    delta1: np.ndarray
    delta_sigma: np.ndarray
    delta_b: np.ndarray
    delta_g: np.ndarray
    X2: Optional[np.ndarray] = None
    Y2: Optional[np.ndarray] = None
    Z2: Optional[np.ndarray] = None
    Zt2: Optional[np.ndarray] = None
    Ystar: Optional[np.ndarray] = None
    Zstar: Optional[np.ndarray] = None
    Ztstar: Optional[np.ndarray] = None
    second_order: Optional[SecondVariationCheck] = None

    @property
    def Y1_0(self) -> float:
        return float(np.mean(self.Y1[:, 0]))


class FirstVariationIdentity(BaseModel):
    """Distances between an independent Y1 solve and the algebraic forms p X1 and K2 X1."""

    mean_abs_y: float
    mean_abs_zt: float
    y1_0: float
    n_steps: int


class SecondVariationCheck(BaseModel):
    """Y2 and Y* at t = 0 with the standard error of their paired difference."""

    y2_0: float
    ystar_0: float
    standard_error: float
    picard: PicardReport

    @property
    def difference(self) -> float:
        return self.y2_0 - self.ystar_0

    def within(self, rel: float = 5e-3) -> bool:
        return abs(self.difference) <= max(3.0 * self.standard_error, rel * abs(self.ystar_0))


@dataclass(frozen=True)
class GammaResult:
    """gamma on (path, knot) with its positivity diagnostics."""

    gamma: np.ndarray
    nonpositive_fraction: float
    first_nonpositive_step: Optional[int] = None

    def at(self, k: int) -> np.ndarray:
        return self.gamma[:, k]


def _paired_se(a: np.ndarray, b: np.ndarray) -> float:
    diff = a - b
    return float(np.std(diff, ddof=1) / math.sqrt(diff.size)) if diff.size > 1 else 0.0


# 🌟 - First variation
def first_variation_simulate(problem: Problem, sol: FBSDEPSolution, fo: FirstOrderAdjoint, cfg: SpikeConfig, noise: NoiseBundle) -> VariationProcesses:
    """Euler scheme for X1 with coefficients frozen on the reference trajectory.

    Y1 = p X1, Z1 = K1 X1 + Delta1 on perturbed steps and Zt1 = K2 X1 are reconstructed
    algebraically; Delta1 solves Delta1 = p delta sigma(Delta1).
    """
    cfg.check(problem.T)
    coefs = problem.coefficients
    ms = noise.markspace
    n, K, m = noise.n_paths, noise.n_steps, ms.size
    dt = noise.grid.dt
    mask = spike_mask(noise, cfg)
    control = build_spike_control(sol.control, cfg, noise, sol.X)

    X1 = np.zeros((n, K + 1))
    shifts = {name: np.zeros((n, K, m)) for name in ("delta1", "delta_sigma", "delta_b", "delta_g")}
    for k in range(K):
        sp = step_partials(problem, sol, noise, k)
        p = fo.p[:, k, None]
        K1, K2 = fo.K1[:, k], fo.K2[:, k]
        if mask[:, k].any():
            diff = delta_H(coefs, sp.point, control[:, k, None], p, fo.q[:, k])
            shifts["delta1"][:, k] = diff.delta
            shifts["delta_sigma"][:, k] = diff.delta_sigma
            shifts["delta_b"][:, k] = diff.delta_b
            shifts["delta_g"][:, k] = diff.delta_g

        x1 = X1[:, k, None]
        xi = xi_first(p, K1, K2)
        drift = integrate_marks(ms, directional(sp.b.grad, xi) * x1)
        diffusion = integrate_marks(ms, directional(sp.sigma.grad, xi) * x1 + shifts["delta_sigma"][:, k])
        jump = directional(sp.f.grad[_F_ROWS], xi[_F_ROWS]) * x1
        X1[:, k + 1] = X1[:, k] + dt * drift + diffusion * noise.dW[:, k] + (jump * noise.dN[:, k]).sum(axis=1) - dt * integrate_marks(ms, jump)

    x1_steps = X1[:, :K, None]
    var = VariationProcesses(
        mask=mask,
        control=control,
        X1=X1,
        Y1=fo.p * X1,
        Z1=fo.K1 * x1_steps + shifts["delta1"],
        Zt1=fo.K2 * x1_steps,
        **shifts,
    )
    logger.debug(f"{problem.name}: E sup|X1|^2 = {float(np.mean(np.max(X1**2, axis=1))):.3e} at epsilon = {cfg.epsilon:g}")
    return var


def first_variation_backward(
    problem: Problem,
    sol: FBSDEPSolution,
    fo: FirstOrderAdjoint,
    var: VariationProcesses,
    noise: NoiseBundle,
    reg_cfg: RegressionConfig = RegressionConfig(),
) -> FirstVariationIdentity:
    """Solve the Y1 equation by regression on (X, X1) and compare with p X1 and K2 X1.

    The whole fitted martingale part is taken out of each step ("full" mode), so the gaps to
    p X1 and K2 X1 carry the time-discretization error rather than the sampling noise of the
    increments.
    """
    ms = noise.markspace
    K = noise.n_steps
    current: dict[int, StepPartials] = {}

    def prepare(k: int, reg: Regressor) -> None:
        current.clear()
        current[k] = step_partials(problem, sol, noise, k)

    def driver(k: int, y: np.ndarray, z: np.ndarray, zt: np.ndarray) -> np.ndarray:
        g_x, g_y, g_z, g_zt = current[k].g.grad
        # last term: d[p, X1] through W, qbar times int delta sigma
        source = (
            g_x * var.X1[:, k, None]
            + g_y * y[:, None]
            + g_z * (z - var.delta1[:, k])
            + g_zt * zt
            - fo.qbar[:, k, None] * var.delta_sigma[:, k]
        )
        return integrate_marks(ms, source)

    state = np.stack([sol.X, var.X1], axis=-1)
    terminal = problem.coefficients.phi.dx(sol.X[:, K]) * var.X1[:, K]
    y1_cfg = reg_cfg.model_copy(update={"z_mark_mode": "constant", "martingale_mode": "full"})
    result = backward_sweep(terminal, state, noise, y1_cfg, driver, prepare=prepare, label="Y1")
    identity = FirstVariationIdentity(
        mean_abs_y=float(np.mean(np.abs(result.Y - var.Y1))),
        mean_abs_zt=float(np.mean(np.abs(result.Zt - var.Zt1))),
        y1_0=float(np.mean(result.Y[:, 0])),
        n_steps=K,
    )
    logger.info(f"{problem.name}: mean |Y1 - p X1| = {identity.mean_abs_y:.3e}, mean |Zt1 - K2 X1| = {identity.mean_abs_zt:.3e}")
    return identity


# 🌟 - Second variation
def _second_order_sources(problem: Problem, sol: FBSDEPSolution, fo: FirstOrderAdjoint, var: VariationProcesses, noise: NoiseBundle) -> dict[str, np.ndarray]:
    """Per (path, step, mark) sources of the X2 drift, diffusion and jump and of the Y2 driver."""
    coefs = problem.coefficients
    n, K, m = noise.n_paths, noise.n_steps, noise.markspace.size
    out = {name: np.zeros((n, K, m)) for name in ("b", "sigma", "f", "g")}
    for k in range(K):
        sp = step_partials(problem, sol, noise, k)
        p = fo.p[:, k, None]
        xi = xi_first(p, fo.K1[:, k], fo.K2[:, k])
        half_sq = 0.5 * var.X1[:, k, None] ** 2
        out["b"][:, k] = half_sq * quadratic_form(xi, sp.b.hess)
        out["sigma"][:, k] = half_sq * quadratic_form(xi, sp.sigma.hess)
        out["f"][:, k] = half_sq * quadratic_form(xi[_F_ROWS], sp.f.hess[np.ix_(_F_ROWS, _F_ROWS)])
        out["g"][:, k] = half_sq * quadratic_form(xi, sp.g.hess)
        rows = var.mask[:, k]
        if rows.any():
            shifted = sp.point.args(z=sp.point.z + var.delta1[:, k], u=var.control[:, k, None])
            grad_shift = coefs.sigma.gradient(*shifted) - sp.sigma.grad
            window = rows[:, None]
            out["b"][:, k] += np.where(window, var.delta_b[:, k], 0.0)
            out["sigma"][:, k] += np.where(window, var.X1[:, k, None] * directional(grad_shift, xi), 0.0)
            out["g"][:, k] += np.where(window, fo.q[:, k] * var.delta_sigma[:, k] + var.delta_g[:, k], 0.0)
    return out


def _ystar_solve(problem: Problem, sol: FBSDEPSolution, fo: FirstOrderAdjoint, so: SecondOrderAdjoint, var: VariationProcesses, noise: NoiseBundle, reg_cfg: RegressionConfig) -> BackwardResult:
    ms = noise.markspace
    current: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = {}

    def prepare(k: int, reg: Regressor) -> None:
        sp = step_partials(problem, sol, noise, k)
        p = fo.p[:, k, None]
        loads = ystar_loadings(sp, p, fo.q[:, k], fo.qt[:, k], EPS_DEN)
        delta_h = var.delta_g[:, k] + p * var.delta_b[:, k] + fo.q[:, k] * var.delta_sigma[:, k]
        source = np.where(var.mask[:, k, None], delta_h + 0.5 * so.P[:, k, None] * var.delta_sigma[:, k] ** 2, 0.0)
        current.clear()
        current[k] = (loads.A, loads.B, loads.C, source)

    def driver(k: int, y: np.ndarray, z: np.ndarray, zt: np.ndarray) -> np.ndarray:
        A, B, C, source = current[k]
        return integrate_marks(ms, A * y[:, None] + B * z + C * zt + source)

    terminal = np.zeros(noise.n_paths)
    return backward_sweep(terminal, sol.X, noise, reg_cfg.model_copy(update={"z_mark_mode": "constant"}), driver, prepare=prepare, label="Y*")


def second_variation_simulate(
    problem: Problem,
    sol: FBSDEPSolution,
    fo: FirstOrderAdjoint,
    so: SecondOrderAdjoint,
    var: VariationProcesses,
    noise: NoiseBundle,
    reg_cfg: RegressionConfig = RegressionConfig(),
    picard_cfg: PicardConfig = PicardConfig(),
) -> VariationProcesses:
    """Solve the linear coupled (X2, Y2) system by Picard iteration and the Y* equation.

    Returns `var` extended with the second-order processes and the t = 0 comparison of Y2 and Y*.
    """
    coefs = problem.coefficients
    ms = noise.markspace
    n, K = noise.n_paths, noise.n_steps
    dt = noise.grid.dt
    sources = _second_order_sources(problem, sol, fo, var, noise)
    terminal_quadratic = 0.5 * coefs.phi.dxx(sol.X[:, K]) * var.X1[:, K] ** 2

    def step(frozen: BackwardTriple) -> tuple[np.ndarray, BackwardResult]:
        X2 = np.zeros((n, K + 1))
        for k in range(K):
            args = sol.point(noise, k).args()
            x2, y2 = X2[:, k, None], frozen.y[:, k, None]
            z2, zt2 = frozen.z[:, k], frozen.zt[:, k]
            b_x, b_y, b_z, b_zt = coefs.b.gradient(*args)
            s_x, s_y, s_z, s_zt = coefs.sigma.gradient(*args)
            f_x, f_y, _, f_zt = coefs.f.gradient(*args)
            drift = integrate_marks(ms, b_x * x2 + b_y * y2 + b_z * z2 + b_zt * zt2 + sources["b"][:, k])
            diffusion = integrate_marks(ms, s_x * x2 + s_y * y2 + s_z * z2 + s_zt * zt2 + sources["sigma"][:, k])
            jump = f_x * x2 + f_y * y2 + f_zt * zt2 + sources["f"][:, k]
            X2[:, k + 1] = X2[:, k] + dt * drift + diffusion * noise.dW[:, k] + (jump * noise.dN[:, k]).sum(axis=1) - dt * integrate_marks(ms, jump)

        def driver(k: int, y: np.ndarray, z: np.ndarray, zt: np.ndarray) -> np.ndarray:
            g_x, g_y, g_z, g_zt = coefs.g.gradient(*sol.point(noise, k).args())
            return integrate_marks(ms, g_x * X2[:, k, None] + g_y * y[:, None] + g_z * z + g_zt * zt + sources["g"][:, k])

        state = np.stack([sol.X, var.X1, X2], axis=-1)
        terminal = coefs.phi.dx(sol.X[:, K]) * X2[:, K] + terminal_quadratic
        return X2, backward_sweep(terminal, state, noise, reg_cfg.model_copy(update={"z_mark_mode": "constant"}), driver, label="Y2")

    X2, second, report = run_picard(step, noise, tol=picard_cfg.tol, max_iter=picard_cfg.max_iter, label=f"{problem.name} second variation")
    ystar = _ystar_solve(problem, sol, fo, so, var, noise, reg_cfg)
    check = SecondVariationCheck(
        y2_0=float(np.mean(second.Y[:, 0])),
        ystar_0=float(np.mean(ystar.Y[:, 0])),
        standard_error=_paired_se(second.y0_samples, ystar.y0_samples),
        picard=report,
    )
    logger.info(f"{problem.name}: Y2_0 = {check.y2_0:.6g}, Y*_0 = {check.ystar_0:.6g} (+/- {check.standard_error:.2g})")
    return replace(var, X2=X2, Y2=second.Y, Z2=second.Z, Zt2=second.Zt, Ystar=ystar.Y, Zstar=ystar.Z, Ztstar=ystar.Zt, second_order=check)


# 🌟 - gamma
def gamma_simulate(problem: Problem, sol: FBSDEPSolution, fo: FirstOrderAdjoint, noise: NoiseBundle, eps_den: float = EPS_DEN) -> GammaResult:
    """gamma_{k+1} = gamma_k (1 + dt int A + (int B / lambda) dW + sum_j C_j (dN_j - nu_j dt)), gamma_0 = 1."""
    ms = noise.markspace
    n, K = noise.n_paths, noise.n_steps
    dt = noise.grid.dt
    weights = ms.weights_array
    gamma = np.ones((n, K + 1))
    for k in range(K):
        sp = step_partials(problem, sol, noise, k)
        loads = ystar_loadings(sp, fo.p[:, k, None], fo.q[:, k], fo.qt[:, k], eps_den)
        jumps = (loads.C * (noise.dN[:, k] - weights * dt)).sum(axis=1)
        factor = 1.0 + dt * integrate_marks(ms, loads.A) + integrate_marks(ms, loads.B) / ms.total_mass * noise.dW[:, k] + jumps
        gamma[:, k + 1] = gamma[:, k] * factor

    nonpositive = gamma <= 0.0
    fraction = float(nonpositive.mean())
    first: Optional[int] = None
    if nonpositive.any():
        first = int(np.flatnonzero(nonpositive.any(axis=0))[0])
        logger.warning(f"{problem.name}: gamma is non-positive on {fraction:.2%} of (path, knot) cells, first at knot {first}; reduce dt")
    return GammaResult(gamma=gamma, nonpositive_fraction=fraction, first_nonpositive_step=first)
