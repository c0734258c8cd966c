"""Finite mark space (E, nu) with point masses and the nu-integrals built on it."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from jumpsnakes.base.exceptions import DimensionError, InvalidParameterError

logger: logging.Logger = logging.getLogger(__name__)


# -
@dataclass(frozen=True)
class MarkSpace:
    """Finitely many marks e_j carrying intensity mass nu_j > 0.

    Every integral against nu(de) in the solvers is the weighted sum over these marks,
    accumulated left to right with Kahan compensation.
    """

    marks: tuple[float, ...]
    weights: tuple[float, ...]
    total_mass: float = field(init=False)

    def __post_init__(self) -> None:
        marks = tuple(float(e) for e in self.marks)
        weights = tuple(float(w) for w in self.weights)
        if not marks:
            raise DimensionError("Mark space needs at least one mark")
        if len(marks) != len(weights):
            raise DimensionError(f"Got {len(marks)} marks but {len(weights)} weights")
        if len(set(marks)) != len(marks):
            raise InvalidParameterError(f"Mark values must be distinct, got {marks}")
        for w in weights:
            if not math.isfinite(w) or w <= 0.0:
                raise InvalidParameterError(f"Mark weights must be finite and strictly positive, got {weights}")
        object.__setattr__(self, "marks", marks)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "total_mass", _kahan_sum(weights))

    # -
    @classmethod
    def single(cls, mark: float = 1.0, intensity: float = 1.0) -> MarkSpace:
        """One mark carrying the whole intensity."""
        return cls(marks=(mark,), weights=(intensity,))

    @classmethod
    def from_config(cls, marks: Sequence[float], weights: Sequence[float]) -> MarkSpace:
        return cls(marks=tuple(marks), weights=tuple(weights))

    @property
    def size(self) -> int:
        return len(self.marks)

    @property
    def marks_array(self) -> np.ndarray:
        arr = np.asarray(self.marks, dtype=np.float64)
        arr.setflags(write=False)
        return arr

    @property
    def weights_array(self) -> np.ndarray:
        arr = np.asarray(self.weights, dtype=np.float64)
        arr.setflags(write=False)
        return arr

    @property
    def probabilities(self) -> np.ndarray:
        """Mark probabilities nu_j / lambda for the jump sampler."""
        return self.weights_array / self.total_mass


# -
@dataclass(frozen=True)
class MarkVector:
    """A function e -> v(e) on the discretized mark space, one value per mark."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


VectorLike = Union[MarkVector, Sequence[float], np.ndarray]


def _kahan_sum(terms: Iterable[float]) -> float:
    total = 0.0
    comp = 0.0
    for term in terms:
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def _values(ms: MarkSpace, v: VectorLike) -> np.ndarray:
    arr = v.as_array() if isinstance(v, MarkVector) else np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != ms.size:
        raise DimensionError(f"Mark vector of length {arr.shape[0] if arr.ndim else 0} does not match {ms.size} marks")
    return arr


# 🌟 - nu-integration
def integrate(ms: MarkSpace, v: VectorLike) -> float:
    """Return the integral of v against nu, i.e. sum_j nu_j v_j."""
    values = _values(ms, v)
    return _kahan_sum(w * float(x) for w, x in zip(ms.weights, values))


def l2_norm(ms: MarkSpace, v: VectorLike) -> float:
    """Return the L2(nu) norm sqrt(sum_j nu_j v_j^2)."""
    values = _values(ms, v)
    return math.sqrt(_kahan_sum(w * float(x) * float(x) for w, x in zip(ms.weights, values)))


def integrate_marks(ms: MarkSpace, values: np.ndarray) -> np.ndarray:
    """Integrate along the last axis (marks) of an array, compensated and in fixed mark order."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-1] != ms.size:
        raise DimensionError(f"Last axis has {values.shape[-1]} entries but the mark space has {ms.size} marks")
    total = np.zeros(values.shape[:-1], dtype=np.float64)
    comp = np.zeros_like(total)
    for j, w in enumerate(ms.weights):
        y = w * values[..., j] - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def l2_norm_marks(ms: MarkSpace, values: np.ndarray) -> np.ndarray:
    """Vectorized L2(nu) norm along the last axis."""
    return np.sqrt(integrate_marks(ms, np.square(values)))
