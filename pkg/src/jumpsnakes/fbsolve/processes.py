"""Grid processes on (path, step[, mark]) arrays and the frozen backward triple."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from jumpsnakes.base.exceptions import DimensionError, DivergenceError, InvalidParameterError
from jumpsnakes.base.noise import NoiseBundle
from jumpsnakes.model.coefficients import TrajectoryPoint


def check_grid_process(name: str, values: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Validate the shape and finiteness of a grid process array."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != shape:
        raise DimensionError(f"{name} has shape {values.shape}, expected {shape}")
    if not np.all(np.isfinite(values)):
        path, step = np.argwhere(~np.isfinite(values))[0][:2]
        raise DivergenceError(f"{name} is not finite at path {path}, step {step}", path=int(path), step=int(step))
    return values


@dataclass(frozen=True)
class BackwardTriple:
    """(y, z, zt) frozen into the forward equation: y on knots, z and zt per step and mark."""

    y: np.ndarray
    z: np.ndarray
    zt: np.ndarray

    @classmethod
    def zeros(cls, n_paths: int, n_steps: int, n_marks: int) -> BackwardTriple:
        return cls(
            y=np.zeros((n_paths, n_steps + 1)),
            z=np.zeros((n_paths, n_steps, n_marks)),
            zt=np.zeros((n_paths, n_steps, n_marks)),
        )

    def truncated(self, q: float) -> BackwardTriple:
        """Copy with every (step[, mark]) column clipped to its [q, 1 - q] quantiles across paths."""
        if not 0.0 <= q < 0.5:
            raise InvalidParameterError(f"Truncation level must lie in [0, 0.5), got {q}")
        if q == 0.0:
            return self
        return BackwardTriple(y=_winsorize(self.y, q), z=_winsorize(self.z, q), zt=_winsorize(self.zt, q))


def _winsorize(values: np.ndarray, q: float) -> np.ndarray:
    lo, hi = np.quantile(values, [q, 1.0 - q], axis=0)
    return np.clip(values, lo, hi)


def point_at(noise: NoiseBundle, k: int, x: np.ndarray, triple: BackwardTriple, control: np.ndarray, *, u: Optional[np.ndarray] = None) -> TrajectoryPoint:
    """Coefficient arguments at the left endpoint of step k."""
    return TrajectoryPoint(
        t=noise.grid.t(k),
        x=x[:, k, None],
        y=triple.y[:, k, None],
        z=triple.z[:, k],
        zt=triple.zt[:, k],
        u=(control[:, k] if u is None else u)[:, None],
        e=noise.markspace.marks_array,
    )
