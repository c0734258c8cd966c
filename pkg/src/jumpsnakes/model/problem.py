"""Control problem declaration: control set, Lipschitz budget, oracles and the Problem itself."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from jumpsnakes.base.markspace import MarkSpace
from jumpsnakes.base.noise import TimeGrid
from jumpsnakes.model.coefficients import Coefficients

logger: logging.Logger = logging.getLogger(__name__)


class ControlSet(BaseModel):
    """Admissible control values U: a box [u_min, u_max] or a finite list."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["box", "finite"] = "box"
    u_min: float = -10.0
    u_max: float = 10.0
    values: list[float] = Field(default_factory=list)
    grid_size: int = Field(default=41, ge=2)

    @model_validator(mode="after")
    def _check(self) -> ControlSet:
        match self.kind:
            case "box":
                if not (math.isfinite(self.u_min) and math.isfinite(self.u_max)):
                    raise ValueError("Box control bounds must be finite")
                if self.u_min > self.u_max:
                    raise ValueError(f"Empty control box [{self.u_min}, {self.u_max}]")
            case "finite":
                if not self.values:
                    raise ValueError("A finite control set needs at least one value")
                if not all(math.isfinite(v) for v in self.values):
                    raise ValueError("Finite control values must be finite")
        return self

    def sample_grid(self, n: Optional[int] = None) -> np.ndarray:
        """Verification grid: evenly spaced over the box, or the finite list itself."""
        if self.kind == "finite":
            return np.asarray(sorted(self.values), dtype=np.float64)
        return np.linspace(self.u_min, self.u_max, n or self.grid_size)

    def contains(self, u: Any) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "box":
            return (u >= self.u_min) & (u <= self.u_max)
        return np.isin(u, np.asarray(self.values))

    def project(self, u: Any) -> np.ndarray:
        """Nearest admissible value."""
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "box":
            return np.clip(u, self.u_min, self.u_max)
        values = np.asarray(sorted(self.values))
        idx = np.abs(u[..., None] - values).argmin(axis=-1)
        return values[idx]


class LipschitzBudget(BaseModel):
    """Declared Lipschitz constants L1..L4 of the coefficients; C0 = max(L2, L3, L4).

    `growth` bounds |b|, |sigma| and |f| by growth * (1 + |x| + |y| + |z| + |zt| + |u|); 0 leaves it undeclared.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    L1: float = Field(default=0.0, ge=0.0)
    L2: float = Field(default=0.0, ge=0.0)
    L3: float = Field(default=0.0, ge=0.0)
    L4: float = Field(default=0.0, ge=0.0)
    growth: float = Field(default=0.0, ge=0.0)

    @property
    def C0(self) -> float:
        return max(self.L2, self.L3, self.L4)

    def budget_term(self, p: float, T: float) -> float:
        """2 (2p)^{p/2} C0^p (1 + T^p): the contraction constant without its non-explicit factor C_p."""
        return 2.0 * (2.0 * p) ** (p / 2.0) * self.C0**p * (1.0 + T**p)


# -
@dataclass(frozen=True)
class ProblemOracle:
    """Closed-form answers a builtin problem knows about itself. Any entry may be missing."""

    control: Optional[Callable[[Any], Any]] = None
    first_adjoint: Optional[Callable[[Any], Any]] = None
    expected_state: Optional[Callable[[Any], Any]] = None
    cost: Optional[float] = None
    hamiltonian_u: Optional[Callable[..., Any]] = None
    description: str = ""


@dataclass(frozen=True)
class Problem:
    """A fully coupled forward-backward control problem with Poisson jumps."""

    name: str
    x0: float
    T: float
    coefficients: Coefficients
    markspace: MarkSpace
    controls: ControlSet = field(default_factory=ControlSet)
    budget: LipschitzBudget = field(default_factory=LipschitzBudget)
    oracle: Optional[ProblemOracle] = None
    parameters: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.T > 0.0:
            raise ValueError(f"Horizon T must be positive, got {self.T}")
        if not math.isfinite(self.x0):
            raise ValueError(f"Initial state must be finite, got {self.x0}")

    def grid(self, n_steps: int) -> TimeGrid:
        return TimeGrid(T=self.T, n_steps=n_steps)

    def with_overrides(self, **changes: Any) -> Problem:
        return replace(self, **changes)

    @property
    def C0(self) -> float:
        return self.budget.C0
