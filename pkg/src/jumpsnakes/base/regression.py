"""Least-squares Monte Carlo regression onto standardized polynomial bases of the state."""

from __future__ import annotations

import logging
from itertools import combinations_with_replacement
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import cho_factor, cho_solve

from jumpsnakes.base.exceptions import RegressionError

logger: logging.Logger = logging.getLogger(__name__)

ZMarkMode = Literal["constant", "per-mark"]
MartingaleMode = Literal["centered", "full"]


class RegressionConfig(BaseModel):
    """Numerical settings shared by every backward regression solve.

    `martingale_degree` is the degree of the state polynomials multiplying dW and the
    compensated jumps when Z and Zt are fitted. `martingale_mode` says how the fitted
    martingale part is taken out of Y_{k+1} before the conditional expectation: "centered"
    keeps the sample mean of Y_{k+1} exactly, "full" also drops the sample mean of the
    fitted increments.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    degree: int = Field(default=3, ge=0)
    ridge: float = Field(default=1e-8, ge=0.0)
    implicit_inner_iters: int = Field(default=10, ge=1)
    implicit_tol: float = Field(default=1e-10, gt=0.0)
    z_mark_mode: ZMarkMode = "constant"
    martingale_degree: int = Field(default=1, ge=0)
    martingale_mode: MartingaleMode = "centered"


def _standardize(column: np.ndarray) -> Optional[np.ndarray]:
    """Centered, unit-variance copy of a column, or None when it carries no spread."""
    mu = float(column.mean())
    sd = float(column.std())
    if not sd > 1e-12 * (1.0 + abs(mu)):
        return None
    return (column - mu) / sd


def polynomial_features(state: np.ndarray, degree: int) -> np.ndarray:
    """Standardized monomials of total degree 1..degree in the state columns.

    Columns without spread are dropped, so a constant state gives an (n, 0) array.
    """
    state = np.asarray(state, dtype=np.float64)
    if state.ndim == 1:
        state = state[:, None]
    live = [col for col in (_standardize(state[:, i]) for i in range(state.shape[1])) if col is not None]
    columns: list[np.ndarray] = []
    for deg in range(1, degree + 1):
        for combo in combinations_with_replacement(range(len(live)), deg):
            product = live[combo[0]].copy()
            for i in combo[1:]:
                product *= live[i]
            standardized = _standardize(product)
            if standardized is not None:
                columns.append(standardized)
    return np.column_stack(columns) if columns else np.empty((state.shape[0], 0))


def _factorize(gram: np.ndarray, ridge: float):
    try:
        return cho_factor(gram, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise RegressionError(f"Regression normal matrix with {gram.shape[0]} columns is singular (ridge={ridge}): {e}") from e


class Regressor:
    """Projection onto monomials of the state at one time step.

    The state may be one column (X) or several (e.g. X and a variation process). The
    intercept is fitted separately and is not penalized, so constant targets are reproduced
    exactly. Columns without spread are dropped, which leaves only the intercept at t = 0.
    """

    def __init__(self, state: np.ndarray, degree: int = 3, ridge: float = 1e-8) -> None:
        self.basis: np.ndarray = polynomial_features(state, degree)
        self.n_samples: int = int(self.basis.shape[0])
        self.ridge = ridge
        self._factor = None
        if self.n_features:
            self._factor = _factorize(self.basis.T @ self.basis / self.n_samples + ridge * np.eye(self.n_features), ridge)

    @property
    def n_features(self) -> int:
        return int(self.basis.shape[1])

    def fit(self, target: np.ndarray) -> np.ndarray:
        """Fitted conditional expectation of `target` (shape (n,) or (n, r)) given the state."""
        target = np.asarray(target, dtype=np.float64)
        mean = target.mean(axis=0)
        if self._factor is None:
            return np.broadcast_to(mean, target.shape).copy()
        centered = target - mean
        coef = cho_solve(self._factor, self.basis.T @ centered / self.n_samples, check_finite=False)
        return mean + self.basis @ coef

    def split(self, target: np.ndarray, increments: np.ndarray) -> np.ndarray:
        """Coefficients of `increments` (n, r) in the joint fit of `target` on the basis and the increments.

        The increment columns are centered and scaled before the solve; columns without spread
        get a zero coefficient.
        """
        target = np.asarray(target, dtype=np.float64)
        increments = np.asarray(increments, dtype=np.float64)
        out = np.zeros(increments.shape[1])
        centered = increments - increments.mean(axis=0)
        scale = np.sqrt(np.mean(np.square(centered), axis=0))
        live = scale > 0.0
        if not live.any():
            return out
        design = np.hstack([self.basis, centered[:, live] / scale[live]])
        gram = design.T @ design / self.n_samples + self.ridge * np.eye(design.shape[1])
        coef = cho_solve(_factorize(gram, self.ridge), design.T @ (target - target.mean()) / self.n_samples, check_finite=False)
        out[live] = coef[self.n_features :] / scale[live]
        return out
