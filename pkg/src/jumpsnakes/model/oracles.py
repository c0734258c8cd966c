"""Closed-form oracles for the builtin problems."""

from __future__ import annotations

import logging
import math
from typing import Any, Callable

import numpy as np

from jumpsnakes.model.problem import Problem, ProblemOracle

logger: logging.Logger = logging.getLogger(__name__)

OracleBuilder = Callable[[Problem], ProblemOracle]


def _zero(problem: Problem) -> ProblemOracle:
    x0 = problem.x0
    return ProblemOracle(
        expected_state=lambda t: np.full(np.shape(t), x0, dtype=np.float64),
        first_adjoint=lambda t: np.zeros(np.shape(t)),
        cost=0.0,
        description="X = x0, Y = Z = Z~ = 0",
    )


def _linear_forward(problem: Problem) -> ProblemOracle:
    a = problem.parameters["a"]
    lam = problem.markspace.total_mass
    x0, T = problem.x0, problem.T
    return ProblemOracle(
        expected_state=lambda t: x0 * np.exp(lam * a * np.asarray(t, dtype=np.float64)),
        cost=x0 * math.exp(lam * a * T),
        description="E[X_t] = x0 exp(lambda a t); Y_0 = E[X_T]",
    )


def _linear_bsde(problem: Problem) -> ProblemOracle:
    r = problem.parameters["r"]
    lam = problem.markspace.total_mass
    return ProblemOracle(
        expected_state=lambda t: np.full(np.shape(t), problem.x0, dtype=np.float64),
        cost=math.exp(lam * r * problem.T),
        description="Y_t = exp(lambda r (T - t))",
    )


def _lq_jump(problem: Problem) -> ProblemOracle:
    c, beta = problem.parameters["c"], problem.parameters["beta"]
    lam = problem.markspace.total_mass
    T = problem.T

    def adjoint(t: Any) -> np.ndarray:
        return beta + c * lam * (T - np.asarray(t, dtype=np.float64))

    return ProblemOracle(
        control=lambda t: problem.controls.project(-adjoint(t)),
        first_adjoint=adjoint,
        hamiltonian_u=lambda u, p: np.asarray(u, dtype=np.float64) + p,
        description="p_t = beta + c lambda (T - t), u_t = -p_t",
    )


def _controlled_diffusion(problem: Problem) -> ProblemOracle:
    a, c, beta = problem.parameters["a"], problem.parameters["c"], problem.parameters["beta"]
    lam = problem.markspace.total_mass
    T = problem.T

    def adjoint(t: Any) -> np.ndarray:
        tau = T - np.asarray(t, dtype=np.float64)
        if a == 0.0:
            return beta + c * lam * tau
        return (beta + c / a) * np.exp(lam * a * tau) - c / a

    return ProblemOracle(
        control=lambda t: problem.controls.project(-adjoint(t)),
        first_adjoint=adjoint,
        hamiltonian_u=lambda u, p: np.asarray(u, dtype=np.float64) + p,
        description="p solves -dp = lambda (c + a p) dt, p_T = beta; u_t = -p_t",
    )


ORACLES: dict[str, OracleBuilder] = {
    "zero": _zero,
    "linear_forward": _linear_forward,
    "linear_bsde": _linear_bsde,
    "lq_jump": _lq_jump,
    "controlled_diffusion": _controlled_diffusion,
}
