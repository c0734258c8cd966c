"""First-order expansion of the spike cost gap: J(u^eps) - J(u) = eps G + o(eps)."""

from __future__ import annotations

import logging
import math
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field

from jumpsnakes.adjoint.first_order import AdjointConfig, FirstOrderAdjoint, solve_first_order_adjoint
from jumpsnakes.adjoint.kalgebra import EPS_DEN
from jumpsnakes.adjoint.partials import step_partials
from jumpsnakes.adjoint.second_order import SecondOrderAdjoint, solve_second_order_adjoint
from jumpsnakes.base.markspace import integrate_marks
from jumpsnakes.base.noise import NoiseBundle
from jumpsnakes.base.regression import RegressionConfig
from jumpsnakes.fbsolve.picard import FBSDEPSolution, PicardConfig, picard_solve
from jumpsnakes.maxprinciple.hamiltonian import delta_H
from jumpsnakes.maxprinciple.orders import check_epsilons
from jumpsnakes.maxprinciple.spike import SpikeConfig, SpikeGap, replacement_values, spike_anchor, spike_cost_gap
from jumpsnakes.maxprinciple.variations import gamma_simulate
from jumpsnakes.model.problem import Problem

logger: logging.Logger = logging.getLogger(__name__)

# Residuals may rise by this many standard errors (relative to epsilon) and still count as decreasing.
NOISE_SLACK: float = 3.0


class ExpansionConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    epsilons: list[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025])


class ExpansionReport(BaseModel):
    """Spike gaps against the first-order prediction eps * G over an epsilon list."""

    problem: str
    t_bar: float
    G: float
    G_standard_error: float
    epsilons: list[float]
    epsilons_effective: list[float]
    gaps: list[SpikeGap]
    residuals: list[float]
    decreasing: bool
    final_bound: float
    final_ok: bool
    sign_consistent: bool

    @computed_field
    @property
    def passed(self) -> bool:
        return self.decreasing and self.final_ok and self.sign_consistent


def first_order_coefficient(
    problem: Problem,
    sol: FBSDEPSolution,
    fo: FirstOrderAdjoint,
    so: SecondOrderAdjoint,
    cfg: SpikeConfig,
    noise: NoiseBundle,
    eps_den: float = EPS_DEN,
) -> tuple[float, float]:
    """G = E[gamma(t_bar) int (delta H + P (delta sigma)^2 / 2) dnu] at the replacement, with its SE."""
    k = min(spike_anchor(noise.grid, cfg), noise.n_steps - 1)
    sp = step_partials(problem, sol, noise, k)
    p = fo.p[:, k, None]
    u = replacement_values(cfg, noise.grid, sol.X, noise.n_paths)[:, None]
    diff = delta_H(problem.coefficients, sp.point, u, p, fo.q[:, k])
    gamma = gamma_simulate(problem, sol, fo, noise, eps_den)
    samples = gamma.at(k) * integrate_marks(noise.markspace, diff.second_order_source(so.P[:, k, None]))
    se = float(np.std(samples, ddof=1) / math.sqrt(samples.size)) if samples.size > 1 else 0.0
    return float(np.mean(samples)), se


# 🌟 - Check
def expansion_check(
    problem: Problem,
    control: np.ndarray,
    cfg: SpikeConfig,
    noise: NoiseBundle,
    epsilons: Sequence[float],
    reg_cfg: RegressionConfig = RegressionConfig(),
    picard_cfg: PicardConfig = PicardConfig(),
    adj_cfg: AdjointConfig = AdjointConfig(),
    *,
    reference: Optional[FBSDEPSolution] = None,
    first_order: Optional[FirstOrderAdjoint] = None,
    second_order: Optional[SecondOrderAdjoint] = None,
) -> ExpansionReport:
    """Compare spike gaps with eps * G along a geometric epsilon list.

    Passes when |gap - eps G| / eps decreases along the list (up to Monte Carlo slack), ends
    below 0.1 (|G| + 3 SE / eps_min), and the two smallest gaps carry the sign of G.
    """
    eps = check_epsilons(epsilons, problem.T, cfg.t_bar)
    bar = reference if reference is not None else picard_solve(problem, control, noise, reg_cfg, settings=picard_cfg)
    fo = first_order or solve_first_order_adjoint(problem, bar, control, noise, reg_cfg, adj_cfg, allow_unconverged=picard_cfg.allow_unconverged)
    so = second_order or solve_second_order_adjoint(problem, bar, fo, control, noise, reg_cfg, adj_cfg)
    G, G_se = first_order_coefficient(problem, bar, fo, so, cfg, noise, adj_cfg.eps_den)

    gaps = [spike_cost_gap(problem, control, cfg.with_epsilon(e), noise, reg_cfg, picard_cfg, reference=bar) for e in eps]
    eff = [g.epsilon_effective for g in gaps]
    residuals = [abs(g.gap - e * G) / e if e > 0.0 else 0.0 for g, e in zip(gaps, eff)]

    decreasing = all(
        later <= earlier + NOISE_SLACK * g.standard_error / e
        for earlier, later, g, e in zip(residuals, residuals[1:], gaps[1:], eff[1:])
        if e > 0.0
    )
    eps_min = eff[-1]
    final_bound = 0.1 * (abs(G) + (3.0 * gaps[-1].standard_error / eps_min if eps_min > 0.0 else 0.0))
    final_ok = residuals[-1] <= final_bound
    sign_consistent = all(np.sign(g.gap) == np.sign(G) for g in gaps[-2:])

    report = ExpansionReport(
        problem=problem.name,
        t_bar=cfg.t_bar,
        G=G,
        G_standard_error=G_se,
        epsilons=eps,
        epsilons_effective=eff,
        gaps=gaps,
        residuals=residuals,
        decreasing=decreasing,
        final_bound=final_bound,
        final_ok=final_ok,
        sign_consistent=sign_consistent,
    )
    logger.info(
        f"{problem.name}: G = {G:.6g} +/- {G_se:.2g}; residuals {', '.join(f'{r:.3g}' for r in residuals)} "
        f"(decreasing={decreasing}, final_ok={final_ok}, sign_consistent={sign_consistent})"
    )
    return report
