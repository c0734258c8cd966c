"""Coefficients b, sigma, f, g and the terminal map phi, with declared first and second partials."""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Optional

import numpy as np

from jumpsnakes.base.exceptions import ProblemError

logger: logging.Logger = logging.getLogger(__name__)

# Order of the differentiated arguments in every gradient and Hessian.
ARGUMENTS: tuple[str, ...] = ("x", "y", "z", "zt")
COEFFICIENT_NAMES: tuple[str, ...] = ("b", "sigma", "f", "g")

ArrayFn = Callable[..., Any]


def _shape(*args: Any) -> tuple[int, ...]:
    return np.broadcast_shapes(*(np.shape(a) for a in args))


# -
@dataclass(frozen=True)
class TrajectoryPoint:
    """Arguments of the coefficients at one time step, broadcastable to (paths, marks).

    Scalars per path come as (n, 1) columns, mark-resolved values as (n, m), marks as (m,).
    """

    t: float
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    zt: np.ndarray
    u: np.ndarray
    e: np.ndarray

    def args(self, *, z: Optional[np.ndarray] = None, u: Optional[np.ndarray] = None) -> tuple[Any, ...]:
        """Positional arguments (t, x, y, z, zt, u, e), optionally with z or u replaced."""
        return (self.t, self.x, self.y, self.z if z is None else z, self.zt, self.u if u is None else u, self.e)

    @property
    def shape(self) -> tuple[int, ...]:
        return _shape(self.x, self.y, self.z, self.zt, self.u, self.e)


# -
class Coefficient(ABC):
    """A real coefficient psi(t, x, y, z, zt, u, e), vectorized over broadcastable arrays.

    `z` and `zt` are the values of Z and Z-tilde at the current mark e.
    """

    @abstractmethod
    def value(self, t: float, x: Any, y: Any, z: Any, zt: Any, u: Any, e: Any) -> np.ndarray:
        pass

    @abstractmethod
    def gradient(self, t: float, x: Any, y: Any, z: Any, zt: Any, u: Any, e: Any) -> np.ndarray:
        """Partials in (x, y, z, zt), stacked on a leading axis of length 4."""
        pass

    def hessian(self, t: float, x: Any, y: Any, z: Any, zt: Any, u: Any, e: Any) -> np.ndarray:
        """Second partials, shape (4, 4, *broadcast shape). Zero unless overridden."""
        return np.zeros((4, 4) + _shape(x, y, z, zt, u, e))

    def __call__(self, t: float, x: Any, y: Any, z: Any, zt: Any, u: Any, e: Any) -> np.ndarray:
        return self.value(t, x, y, z, zt, u, e)


@dataclass(frozen=True)
class AffineCoefficient(Coefficient):
    """psi = const + x X + y Y + z Z + zt Zt + u U + uu U^2 / 2, optionally multiplied by the mark e."""

    const: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    zt: float = 0.0
    u: float = 0.0
    uu: float = 0.0
    mark_weighted: bool = False

    def _scale(self, e: Any) -> Any:
        return np.asarray(e, dtype=np.float64) if self.mark_weighted else 1.0

    def value(self, t, x, y, z, zt, u, e) -> np.ndarray:
        shape = _shape(x, y, z, zt, u, e)
        u = np.asarray(u, dtype=np.float64)
        raw = self.const + self.x * x + self.y * y + self.z * z + self.zt * zt + self.u * u + 0.5 * self.uu * u * u
        return np.broadcast_to(raw * self._scale(e), shape).astype(np.float64)

    def gradient(self, t, x, y, z, zt, u, e) -> np.ndarray:
        shape = _shape(x, y, z, zt, u, e)
        scale = self._scale(e)
        return np.stack([np.broadcast_to(c * scale, shape) for c in (self.x, self.y, self.z, self.zt)]).astype(np.float64)

    @property
    def is_zero(self) -> bool:
        return not any((self.const, self.x, self.y, self.z, self.zt, self.u, self.uu))

    @property
    def depends_on_control(self) -> bool:
        return bool(self.u or self.uu)

    @classmethod
    def from_table(cls, table: Optional[dict[str, Any]]) -> AffineCoefficient:
        return cls(**(table or {}))


@dataclass(frozen=True)
class CallableCoefficient(Coefficient):
    """Coefficient backed by user functions; the Hessian defaults to zero."""

    value_fn: ArrayFn
    gradient_fn: ArrayFn
    hessian_fn: Optional[ArrayFn] = None

    def value(self, t, x, y, z, zt, u, e) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.value_fn(t, x, y, z, zt, u, e), dtype=np.float64), _shape(x, y, z, zt, u, e)).copy()

    def gradient(self, t, x, y, z, zt, u, e) -> np.ndarray:
        shape = _shape(x, y, z, zt, u, e)
        parts = self.gradient_fn(t, x, y, z, zt, u, e)
        return np.stack([np.broadcast_to(np.asarray(p, dtype=np.float64), shape) for p in parts])

    def hessian(self, t, x, y, z, zt, u, e) -> np.ndarray:
        if self.hessian_fn is None:
            return super().hessian(t, x, y, z, zt, u, e)
        shape = _shape(x, y, z, zt, u, e)
        rows = self.hessian_fn(t, x, y, z, zt, u, e)
        return np.stack([np.stack([np.broadcast_to(np.asarray(h, dtype=np.float64), shape) for h in row]) for row in rows])


# -
class Terminal(ABC):
    """Terminal map phi(x) with phi_x and phi_xx."""

    @abstractmethod
    def value(self, x: Any) -> np.ndarray:
        pass

    @abstractmethod
    def dx(self, x: Any) -> np.ndarray:
        pass

    @abstractmethod
    def dxx(self, x: Any) -> np.ndarray:
        pass


@dataclass(frozen=True)
class QuadraticTerminal(Terminal):
    """phi(x) = c0 + c1 x + c2 x^2 / 2."""

    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.0

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.c0 + self.c1 * x + 0.5 * self.c2 * x * x

    def dx(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.c1 + self.c2 * x

    def dxx(self, x):
        return np.full(np.shape(x), self.c2, dtype=np.float64)

    @classmethod
    def from_table(cls, table: Optional[dict[str, Any]]) -> QuadraticTerminal:
        return cls(**(table or {}))


@dataclass(frozen=True)
class CallableTerminal(Terminal):
    value_fn: ArrayFn
    dx_fn: ArrayFn
    dxx_fn: ArrayFn

    def value(self, x):
        return np.broadcast_to(np.asarray(self.value_fn(x), dtype=np.float64), np.shape(x)).copy()

    def dx(self, x):
        return np.broadcast_to(np.asarray(self.dx_fn(x), dtype=np.float64), np.shape(x)).copy()

    def dxx(self, x):
        return np.broadcast_to(np.asarray(self.dxx_fn(x), dtype=np.float64), np.shape(x)).copy()


# -
@dataclass(frozen=True)
class Coefficients:
    """The coefficient set (b, sigma, f, g, phi) of one control problem.

    The jump coefficient must not depend on Z; `f_ignores_z` records that declaration and the
    validator audits it numerically.
    """

    b: Coefficient = field(default_factory=AffineCoefficient)
    sigma: Coefficient = field(default_factory=AffineCoefficient)
    f: Coefficient = field(default_factory=AffineCoefficient)
    g: Coefficient = field(default_factory=AffineCoefficient)
    phi: Terminal = field(default_factory=QuadraticTerminal)
    f_ignores_z: bool = True

    def __post_init__(self) -> None:
        if not self.f_ignores_z:
            raise ProblemError("The jump coefficient f must be independent of Z (f_ignores_z must be true)")
        if isinstance(self.f, AffineCoefficient) and self.f.z != 0.0:
            raise ProblemError(f"The jump coefficient f declares a Z loading {self.f.z}; f must be independent of Z")

    def items(self) -> Iterator[tuple[str, Coefficient]]:
        for name in COEFFICIENT_NAMES:
            yield name, getattr(self, name)

    @property
    def has_jumps(self) -> bool:
        return not (isinstance(self.f, AffineCoefficient) and self.f.is_zero)

    @property
    def is_decoupled(self) -> bool:
        """True when b, sigma and f are affine without (y, z, zt) loadings."""
        forward = (self.b, self.sigma, self.f)
        return all(isinstance(c, AffineCoefficient) and c.y == 0.0 and c.z == 0.0 and c.zt == 0.0 for c in forward)


# -
@dataclass(frozen=True)
class CoefficientSnapshot:
    """Value, gradient and Hessian of one coefficient at one trajectory point."""

    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray

    def component(self, name: str) -> np.ndarray:
        return self.grad[ARGUMENTS.index(name)]


def snapshot(coefficient: Coefficient, point: TrajectoryPoint, *, z: Optional[np.ndarray] = None, u: Optional[np.ndarray] = None) -> CoefficientSnapshot:
    args = point.args(z=z, u=u)
    return CoefficientSnapshot(value=coefficient.value(*args), grad=coefficient.gradient(*args), hess=coefficient.hessian(*args))
