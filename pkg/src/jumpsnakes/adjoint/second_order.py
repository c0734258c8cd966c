"""Second-order adjoint equation (P, Q, Q~)."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from jumpsnakes.adjoint.first_order import AdjointConfig, FirstOrderAdjoint, check_bound
from jumpsnakes.adjoint.kalgebra import SecondOrderTerms, quadratic_form, second_order_k_algebra, xi_first
from jumpsnakes.adjoint.partials import StepPartials, project_jump_partials, step_partials
from jumpsnakes.base.exceptions import BoundednessError
from jumpsnakes.base.markspace import integrate_marks
from jumpsnakes.base.noise import NoiseBundle
from jumpsnakes.base.regression import RegressionConfig, Regressor
from jumpsnakes.fbsolve.backward import backward_sweep
from jumpsnakes.fbsolve.picard import FBSDEPSolution
from jumpsnakes.model.problem import Problem

logger: logging.Logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SecondOrderAdjoint:
    """P on knots; Q, Q~ and the algebra terms K~1, K~2, R1, R2, m, n per (path, step, mark)."""

    P: np.ndarray
    Q: np.ndarray
    Qt: np.ndarray
    Kt1: np.ndarray
    Kt2: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    m: np.ndarray
    n: np.ndarray
    max_abs_P: float
    bounded: bool

    @property
    def P0(self) -> float:
        return float(np.mean(self.P[:, 0]))


def second_order_bracket(sp: StepPartials, terms: SecondOrderTerms, p: np.ndarray, q: np.ndarray, qt: np.ndarray, K1: np.ndarray, K2: np.ndarray, P: np.ndarray, Q: np.ndarray, Qt: np.ndarray) -> np.ndarray:
    """The second-order driver per (path, mark), before nu-integration."""
    H = sp.hamiltonian_gradient(p, q)
    H_y, H_z, H_zt = H[1], H[2], H[3]
    f_y, f_zt = sp.f.grad[1], sp.f.grad[3]
    A = terms.f_xi
    S = terms.sigma_xi
    H_quad = quadratic_form(xi_first(p, K1, K2), sp.hamiltonian_hessian(p, q))
    return (
        P * (A * A + S * S + 2.0 * terms.b_xi + H_y + qt * f_y)
        + 2.0 * Q * S
        + H_quad
        + qt * terms.f_quad
        + 2.0 * Qt * A
        + H_z * terms.Kt1
        + Qt * A * A
        + H_zt * terms.Kt2
        + qt * f_zt * terms.Kt2
    )


# 🌟 - Solve
def solve_second_order_adjoint(
    problem: Problem,
    sol: FBSDEPSolution,
    fo: FirstOrderAdjoint,
    control: np.ndarray,
    noise: NoiseBundle,
    cfg: RegressionConfig = RegressionConfig(),
    adj_cfg: AdjointConfig = AdjointConfig(),
) -> SecondOrderAdjoint:
    """Backward solve of the linear second-order adjoint with K~1, K~2 recomputed per step."""
    if not fo.bounded:
        message = f"{problem.name}: first-order adjoint is flagged unbounded (max |p| = {fo.max_abs_p:.3e})"
        if adj_cfg.strict_bound:
            raise BoundednessError(message)
        logger.warning(message + "; continuing with the second-order solve")

    control = np.asarray(control, dtype=np.float64)
    n_paths, K, m = noise.n_paths, noise.n_steps, noise.markspace.size
    ms = noise.markspace
    store = {name: np.zeros((n_paths, K, m)) for name in ("Kt1", "Kt2", "R1", "R2", "m", "n")}
    current: dict[int, StepPartials] = {}
    project = adj_cfg.project_jump_partials and problem.coefficients.has_jumps

    def prepare(k: int, reg: Regressor) -> None:
        sp = step_partials(problem, sol, noise, k, control)
        current.clear()
        current[k] = project_jump_partials(sp, reg) if project else sp

    def driver(k: int, P: np.ndarray, Q: np.ndarray, Qt: np.ndarray) -> np.ndarray:
        sp = current[k]
        p = fo.p[:, k, None]
        q, qt, K1, K2 = fo.q[:, k], fo.qt[:, k], fo.K1[:, k], fo.K2[:, k]
        Pc = P[:, None]
        terms = second_order_k_algebra(
            p, qt, K1, K2, Pc, Q, Qt,
            sp.sigma.grad, sp.sigma.hess, sp.b.grad, sp.f.grad, sp.f.hess,
            adj_cfg.eps_den, t=noise.grid.t(k),
        )
        for name, array in store.items():
            array[:, k] = getattr(terms, name)
        return integrate_marks(ms, second_order_bracket(sp, terms, p, q, qt, K1, K2, Pc, Q, Qt))

    terminal = problem.coefficients.phi.dxx(sol.X[:, K])
    adjoint_cfg = cfg.model_copy(update={"z_mark_mode": "constant"})
    result = backward_sweep(terminal, sol.X, noise, adjoint_cfg, driver, prepare=prepare, label="P")

    max_abs, bounded = check_bound(result.Y, adj_cfg, "P")
    so = SecondOrderAdjoint(P=result.Y, Q=result.Z, Qt=result.Zt, max_abs_P=max_abs, bounded=bounded, **store)
    logger.info(f"{problem.name}: P0 = {so.P0:.6g}, max |P| = {max_abs:.3g}")
    return so
