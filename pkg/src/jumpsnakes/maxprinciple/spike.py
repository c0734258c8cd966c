"""Spike variations of a control and the paired cost gap J(u^eps) - J(u)."""

from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from jumpsnakes.base.exceptions import ConfigurationError, NotConvergedError
from jumpsnakes.base.noise import NoiseBundle, TimeGrid
from jumpsnakes.base.regression import RegressionConfig
from jumpsnakes.fbsolve.picard import FBSDEPSolution, PicardConfig, picard_solve
from jumpsnakes.model.problem import Problem

logger: logging.Logger = logging.getLogger(__name__)

# Knot comparisons inside the window test.
WINDOW_TOL: float = 1e-12


class SpikeConfig(BaseModel):
    """Window [t_bar, t_bar + epsilon] and the replacement rule `replacement + state_slope * X_{t_bar}`."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    t_bar: float = Field(default=0.5, ge=0.0)
    epsilon: float = Field(default=0.1, ge=0.0)
    replacement: float = 0.0
    state_slope: float = 0.0

    def check(self, T: float) -> SpikeConfig:
        if self.t_bar >= T:
            raise ConfigurationError(f"Spike time t_bar = {self.t_bar} must lie in [0, {T})")
        if self.t_bar + self.epsilon > T + WINDOW_TOL:
            raise ConfigurationError(f"Spike window [{self.t_bar}, {self.t_bar + self.epsilon}] leaves the horizon [0, {T}]")
        return self

    def with_epsilon(self, epsilon: float) -> SpikeConfig:
        return self.model_copy(update={"epsilon": epsilon})


class SpikeGap(BaseModel):
    """Paired difference of the costs of the spiked and the reference control."""

    gap: float
    standard_error: float
    epsilon: float
    epsilon_effective: float
    perturbed_fraction: float
    excluded_fraction: float
    converged: bool = True


# -
def spike_window(grid: TimeGrid, cfg: SpikeConfig) -> np.ndarray:
    """Steps whose interval (t_k, t_{k+1}] lies inside [t_bar, t_bar + epsilon]."""
    knots = grid.knots
    lo, hi = cfg.t_bar, cfg.t_bar + cfg.epsilon
    return (knots[:-1] >= lo - WINDOW_TOL) & (knots[1:] <= hi + WINDOW_TOL)


def spike_mask(noise: NoiseBundle, cfg: SpikeConfig) -> np.ndarray:
    """(path, step) mask of perturbed steps: window steps that contain no jump of the path."""
    return spike_window(noise.grid, cfg)[None, :] & ~noise.jump_step_mask()


def effective_epsilon(grid: TimeGrid, cfg: SpikeConfig) -> float:
    return float(np.count_nonzero(spike_window(grid, cfg)) * grid.dt)


def spike_anchor(grid: TimeGrid, cfg: SpikeConfig) -> int:
    """Knot index of X_{t_bar}: the last knot at or before t_bar."""
    ratio = cfg.t_bar / grid.dt
    nearest = round(ratio)
    k = nearest if abs(ratio - nearest) < 1e-9 else math.floor(ratio)
    return min(int(k), grid.n_steps)


def replacement_values(cfg: SpikeConfig, grid: TimeGrid, state: Optional[np.ndarray], n_paths: int) -> np.ndarray:
    """Per-path replacement control, F_{t_bar}-measurable by construction."""
    if cfg.state_slope == 0.0:
        return np.full(n_paths, cfg.replacement)
    if state is None:
        raise ConfigurationError("A state-dependent replacement needs the reference state path")
    return cfg.replacement + cfg.state_slope * state[:, spike_anchor(grid, cfg)]


# 🌟 - Spiked control
def build_spike_control(control: np.ndarray, cfg: SpikeConfig, noise: NoiseBundle, state: Optional[np.ndarray] = None) -> np.ndarray:
    """u^eps: the replacement on perturbed steps, the reference control elsewhere."""
    control = np.asarray(control, dtype=np.float64)
    mask = spike_mask(noise, cfg)
    if not mask.any():
        return control.copy()
    values = replacement_values(cfg, noise.grid, state, noise.n_paths)
    return np.where(mask, values[:, None], control)


def spike_cost_gap(
    problem: Problem,
    control: np.ndarray,
    cfg: SpikeConfig,
    noise: NoiseBundle,
    reg_cfg: RegressionConfig = RegressionConfig(),
    picard_cfg: PicardConfig = PicardConfig(),
    *,
    reference: Optional[FBSDEPSolution] = None,
) -> SpikeGap:
    """J(u^eps) - J(u) on common random numbers, with the standard error of the paired samples.

    `reference` reuses an existing solve of `control` on the same noise.
    """
    cfg.check(problem.T)
    window = spike_window(noise.grid, cfg)
    mask = spike_mask(noise, cfg)
    window_cells = int(np.count_nonzero(window)) * noise.n_paths
    excluded = (window_cells - int(np.count_nonzero(mask))) / window_cells if window_cells else 0.0
    eps_eff = effective_epsilon(noise.grid, cfg)
    perturbed = float(mask.mean())
    if not mask.any():
        return SpikeGap(gap=0.0, standard_error=0.0, epsilon=cfg.epsilon, epsilon_effective=eps_eff, perturbed_fraction=0.0, excluded_fraction=excluded)

    bar = reference if reference is not None else picard_solve(problem, control, noise, reg_cfg, settings=picard_cfg)
    spiked = picard_solve(problem, build_spike_control(control, cfg, noise, bar.X), noise, reg_cfg, settings=picard_cfg)
    converged = bar.picard.converged and spiked.picard.converged
    if not converged and not picard_cfg.allow_unconverged:
        raise NotConvergedError(f"{problem.name}: spike gap at epsilon = {cfg.epsilon} uses a non-converged solve")

    diff = spiked.y0_samples - bar.y0_samples
    se = float(np.std(diff, ddof=1) / math.sqrt(diff.size)) if diff.size > 1 else 0.0
    gap = spiked.Y0 - bar.Y0
    logger.info(f"{problem.name}: spike gap at epsilon = {cfg.epsilon:g} (effective {eps_eff:g}) is {gap:.6g} +/- {se:.2g}")
    return SpikeGap(
        gap=gap,
        standard_error=se,
        epsilon=cfg.epsilon,
        epsilon_effective=eps_eff,
        perturbed_fraction=perturbed,
        excluded_fraction=excluded,
        converged=converged,
    )
