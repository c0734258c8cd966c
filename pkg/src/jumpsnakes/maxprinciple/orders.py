"""Convergence orders in the spike width: paired solves over a geometric epsilon list."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field
from scipy import stats

from jumpsnakes.adjoint.first_order import AdjointConfig, FirstOrderAdjoint, solve_first_order_adjoint
from jumpsnakes.base.exceptions import ConfigurationError
from jumpsnakes.base.noise import NoiseBundle
from jumpsnakes.base.regression import RegressionConfig
from jumpsnakes.fbsolve.picard import FBSDEPSolution, PicardConfig, picard_solve
from jumpsnakes.maxprinciple.spike import SpikeConfig, build_spike_control, effective_epsilon
from jumpsnakes.maxprinciple.variations import first_variation_simulate
from jumpsnakes.model.problem import Problem

logger: logging.Logger = logging.getLogger(__name__)

Selector = Literal["forward_gap", "backward_gap", "first_variation", "remainder"]
SELECTORS: tuple[str, ...] = ("forward_gap", "backward_gap", "first_variation", "remainder")

NOISE_FLOOR: float = 1e-13


class OrderConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    selectors: list[Selector] = Field(default_factory=lambda: ["forward_gap", "remainder"])
    epsilons: list[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025, 0.0125])
    beta: float = Field(default=2.0, ge=2.0)
    band: float = Field(default=0.15, gt=0.0)


class OrderFit(BaseModel):
    """Per-epsilon statistics and the least-squares slope of log statistic against log epsilon."""

    selector: str
    beta: float
    epsilons: list[float]
    epsilons_effective: list[float]
    statistics: list[float]
    standard_errors: list[float]
    slope: Optional[float] = None
    intercept: Optional[float] = None
    r_squared: Optional[float] = None
    expected_slope: float
    band: float
    inconclusive: bool = False

    @computed_field
    @property
    def within_band(self) -> Optional[bool]:
        if self.inconclusive or self.slope is None:
            return None
        return abs(self.slope - self.expected_slope) <= self.band * self.expected_slope

    def table(self) -> tuple[list[str], np.ndarray]:
        """CSV rows `epsilon,statistic,se`."""
        return ["epsilon", "statistic", "se"], np.column_stack([self.epsilons_effective, self.statistics, self.standard_errors])


def expected_slope(selector: str, beta: float) -> float:
    return beta if selector == "remainder" else beta / 2.0


def check_epsilons(epsilons: Sequence[float], T: Optional[float] = None, t_bar: float = 0.0) -> list[float]:
    """At least four positive widths, strictly decreasing with a constant ratio."""
    eps = [float(e) for e in epsilons]
    if len(eps) < 4:
        raise ConfigurationError(f"Order fits need at least 4 epsilon values, got {len(eps)}")
    if any(not e > 0.0 for e in eps):
        raise ConfigurationError(f"Epsilon values must be positive, got {eps}")
    ratios = [b / a for a, b in zip(eps, eps[1:])]
    if any(r >= 1.0 for r in ratios):
        raise ConfigurationError(f"Epsilon values must decrease, got {eps}")
    if max(ratios) - min(ratios) > 1e-6 * max(ratios):
        raise ConfigurationError(f"Epsilon values must decrease geometrically, got ratios {ratios}")
    if T is not None and t_bar + eps[0] > T + 1e-12:
        raise ConfigurationError(f"Largest window [{t_bar}, {t_bar + eps[0]}] leaves the horizon [0, {T}]")
    return eps


def _sup_moment(samples: np.ndarray, beta: float) -> tuple[float, float]:
    values = np.max(np.abs(samples), axis=1) ** beta
    se = float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return float(np.mean(values)), se


# 🌟 - Experiment
def order_experiment(
    problem: Problem,
    control: np.ndarray,
    selector: str,
    epsilons: Sequence[float],
    spike: SpikeConfig,
    noise: NoiseBundle,
    beta: float = 2.0,
    band: float = 0.15,
    reg_cfg: RegressionConfig = RegressionConfig(),
    picard_cfg: PicardConfig = PicardConfig(),
    adj_cfg: AdjointConfig = AdjointConfig(),
    *,
    reference: Optional[FBSDEPSolution] = None,
    first_order: Optional[FirstOrderAdjoint] = None,
    threads: int = 1,
) -> OrderFit:
    """Fit the order of E sup|.|^beta in epsilon for one statistic.

    forward_gap: X^eps - X; backward_gap: Y^eps - Y; first_variation: X1;
    remainder: X^eps - X - X1. The first three should scale like eps^(beta/2), the remainder
    like eps^beta. The fit is flagged inconclusive when a statistic is below its noise floor.
    """
    if selector not in SELECTORS:
        raise ConfigurationError(f"Unknown order selector '{selector}'; choose one of {', '.join(SELECTORS)}")
    eps = check_epsilons(epsilons, problem.T, spike.t_bar)
    bar = reference if reference is not None else picard_solve(problem, control, noise, reg_cfg, settings=picard_cfg)
    needs_adjoint = selector in ("first_variation", "remainder")
    fo = first_order
    if needs_adjoint and fo is None:
        fo = solve_first_order_adjoint(problem, bar, control, noise, reg_cfg, adj_cfg, allow_unconverged=picard_cfg.allow_unconverged)

    def run(epsilon: float) -> tuple[float, float, float]:
        cfg = spike.with_epsilon(epsilon).check(problem.T)
        eps_eff = effective_epsilon(noise.grid, cfg)
        if selector == "first_variation":
            var = first_variation_simulate(problem, bar, fo, cfg, noise)
            return (eps_eff, *_sup_moment(var.X1, beta))
        spiked = picard_solve(problem, build_spike_control(control, cfg, noise, bar.X), noise, reg_cfg, settings=picard_cfg)
        match selector:
            case "forward_gap":
                samples = spiked.X - bar.X
            case "backward_gap":
                samples = spiked.Y - bar.Y
            case _:
                samples = spiked.X - bar.X - first_variation_simulate(problem, bar, fo, cfg, noise).X1
        return (eps_eff, *_sup_moment(samples, beta))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, eps))
    else:
        results = [run(e) for e in eps]

    eps_eff = [r[0] for r in results]
    statistics = [r[1] for r in results]
    errors = [r[2] for r in results]
    fit = OrderFit(
        selector=selector,
        beta=beta,
        epsilons=eps,
        epsilons_effective=eps_eff,
        statistics=statistics,
        standard_errors=errors,
        expected_slope=expected_slope(selector, beta),
        band=band,
    )
    floor = [max(NOISE_FLOOR, 3.0 * se) for se in errors]
    if any(s <= f for s, f in zip(statistics, floor)) or any(e <= 0.0 for e in eps_eff) or len(set(eps_eff)) < len(eps_eff):
        logger.warning(f"{problem.name}: {selector} statistics are below the Monte Carlo noise floor; order fit is inconclusive")
        return fit.model_copy(update={"inconclusive": True})

    result = stats.linregress(np.log(eps_eff), np.log(statistics))
    fit = fit.model_copy(update={"slope": float(result.slope), "intercept": float(result.intercept), "r_squared": float(result.rvalue**2)})
    logger.info(f"{problem.name}: {selector} slope {fit.slope:.3f} (expected {fit.expected_slope:g}, R^2 = {fit.r_squared:.4f})")
    return fit
