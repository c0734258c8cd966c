"""Run configuration: a TOML file validated into `RunConfig`, plus the problem, noise and control it describes."""

from __future__ import annotations

import logging
import re
import tomllib
from pathlib import Path
from typing import Any, Callable, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from jumpsnakes.adjoint.first_order import AdjointConfig
from jumpsnakes.base.exceptions import ConfigurationError
from jumpsnakes.base.markspace import MarkSpace
from jumpsnakes.base.noise import NoiseBundle, TimeGrid, generate_noise
from jumpsnakes.base.regression import RegressionConfig
from jumpsnakes.fbsolve.picard import PicardConfig
from jumpsnakes.maxprinciple.expansion import ExpansionConfig
from jumpsnakes.maxprinciple.orders import OrderConfig
from jumpsnakes.maxprinciple.spike import SpikeConfig
from jumpsnakes.maxprinciple.verify import MPConfig
from jumpsnakes.model.factory import coefficients_from_tables, get_problem_factory
from jumpsnakes.model.problem import ControlSet, LipschitzBudget, Problem

logger: logging.Logger = logging.getLogger(__name__)

DEFAULT_OUT: str = "jumpsnakes-out"


# 🌟 - Sections
class AffineTable(BaseModel):
    model_config = ConfigDict(extra="forbid")

    const: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    zt: float = 0.0
    u: float = 0.0
    uu: float = 0.0
    mark_weighted: bool = False


class TerminalTable(BaseModel):
    model_config = ConfigDict(extra="forbid")

    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.0


class CoefficientsSection(BaseModel):
    """Problem source: a builtin name with overrides, or a full set of coefficient tables."""

    model_config = ConfigDict(extra="forbid")

    builtin: Optional[str] = None
    x0: Optional[float] = Field(default=None, allow_inf_nan=False)
    parameters: dict[str, float] = Field(default_factory=dict)
    b: Optional[AffineTable] = None
    sigma: Optional[AffineTable] = None
    f: Optional[AffineTable] = None
    g: Optional[AffineTable] = None
    phi: Optional[TerminalTable] = None

    def tables(self) -> dict[str, dict[str, Any]]:
        named = {"b": self.b, "sigma": self.sigma, "f": self.f, "g": self.g, "phi": self.phi}
        return {name: table.model_dump() for name, table in named.items() if table is not None}


class GridSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    steps: int = Field(default=200, ge=1)
    T: Optional[float] = Field(default=None, gt=0.0, allow_inf_nan=False)


class MarkspaceSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    marks: list[float]
    weights: list[float]

    @model_validator(mode="after")
    def _check(self) -> MarkspaceSection:
        if len(self.marks) != len(self.weights):
            raise ValueError(f"{len(self.marks)} marks but {len(self.weights)} weights")
        return self

    def build(self) -> MarkSpace:
        return MarkSpace.from_config(self.marks, self.weights)


class RunSection(BaseModel):
    """Monte Carlo size, seed, output and the candidate control u_bar."""

    model_config = ConfigDict(extra="forbid")

    n_paths: int = Field(default=10_000, ge=1)
    seed: int = Field(default=0, ge=0)
    threads: int = Field(default=1, ge=1)
    antithetic: bool = False
    out: str = DEFAULT_OUT
    export_paths: int = Field(default=100, ge=1)
    candidate: Literal["auto", "oracle", "zero", "constant"] = "auto"
    candidate_value: float = 0.0
    candidate_shift: float = 0.0


class SpikeSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    t_bar: float = Field(default=0.5, ge=0.0)
    epsilon: float = Field(default=0.1, ge=0.0)
    replacement: Union[float, Literal["oracle"]] = 0.0
    state_slope: float = 0.0

    def resolve(self, problem: Problem) -> SpikeConfig:
        """SpikeConfig with `replacement = "oracle"` turned into u_bar(t_bar) of the problem's oracle."""
        value = self.replacement
        if value == "oracle":
            value = float(np.asarray(require_oracle_control(problem)(self.t_bar)))
        return SpikeConfig(t_bar=self.t_bar, epsilon=self.epsilon, replacement=float(value), state_slope=self.state_slope).check(problem.T)


class RunConfig(BaseModel):
    """Every section of a run file. Unknown sections and keys are errors."""

    model_config = ConfigDict(extra="forbid")

    coefficients: CoefficientsSection = Field(default_factory=CoefficientsSection)
    grid: GridSection = Field(default_factory=GridSection)
    markspace: Optional[MarkspaceSection] = None
    controls: Optional[ControlSet] = None
    budget: Optional[LipschitzBudget] = None
    run: RunSection = Field(default_factory=RunSection)
    regression: RegressionConfig = Field(default_factory=RegressionConfig)
    picard: PicardConfig = Field(default_factory=PicardConfig)
    adjoint: AdjointConfig = Field(default_factory=AdjointConfig)
    spike: SpikeSection = Field(default_factory=SpikeSection)
    mp: MPConfig = Field(default_factory=MPConfig)
    order: OrderConfig = Field(default_factory=OrderConfig)
    expansion: ExpansionConfig = Field(default_factory=ExpansionConfig)

    def resolved(self) -> dict[str, Any]:
        """The full configuration, defaults included, as embedded in every report."""
        return self.model_dump(mode="json")


# 🌟 - Loading
_HEADER = re.compile(r"^\s*\[+\s*([A-Za-z0-9_.\-]+)\s*\]+")
_KEY = re.compile(r"^\s*([A-Za-z0-9_\-]+)\s*=")


def _locate(text: str, loc: tuple[str, ...]) -> Optional[int]:
    """Line number of the most specific table header or key matching an error location."""
    section: tuple[str, ...] = ()
    best: Optional[int] = None
    depth = 0
    for number, line in enumerate(text.splitlines(), start=1):
        header = _HEADER.match(line)
        if header:
            section = tuple(header.group(1).split("."))
            path = section
        else:
            key = _KEY.match(line)
            if not key:
                continue
            path = (*section, key.group(1))
        if loc[: len(path)] == path and len(path) > depth:
            best, depth = number, len(path)
    return best


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"{source}: invalid TOML: {e}") from e
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        lines = []
        for err in e.errors():
            loc = tuple(str(part) for part in err["loc"])
            number = _locate(text, loc)
            where = f"{source}:{number}" if number else source
            lines.append(f"{where}: {'.'.join(loc) or '<root>'}: {err['msg']}")
        raise ConfigurationError("Invalid configuration:\n  " + "\n  ".join(lines)) from e


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Cannot read config file '{path}': {e}") from e
    cfg = parse_config(text, source=str(path))
    logger.info(f"Loaded configuration from {path}")
    return cfg


def apply_overrides(
    cfg: RunConfig,
    *,
    problem: Optional[str] = None,
    seed: Optional[int] = None,
    paths: Optional[int] = None,
    steps: Optional[int] = None,
    out: Optional[str] = None,
    threads: Optional[int] = None,
) -> RunConfig:
    """Command-line values replace the file's; they are validated like the file."""
    run = cfg.run.model_dump()
    grid = cfg.grid.model_dump()
    coefficients = cfg.coefficients.model_dump(exclude_none=True)
    for key, value in (("seed", seed), ("n_paths", paths), ("out", out), ("threads", threads)):
        if value is not None:
            run[key] = value
    if steps is not None:
        grid["steps"] = steps
    if problem is not None:
        coefficients["builtin"] = problem
    try:
        return cfg.model_copy(
            update={
                "run": RunSection.model_validate(run),
                "grid": GridSection.model_validate(grid),
                "coefficients": CoefficientsSection.model_validate(coefficients),
            }
        )
    except ValidationError as e:
        details = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigurationError(f"Invalid command-line override: {details}") from e


# 🌟 - What the configuration describes
def build_problem(cfg: RunConfig) -> Problem:
    """The builtin problem with the file's overrides, or a custom problem from its tables."""
    section = cfg.coefficients
    tables = section.tables()
    markspace = cfg.markspace.build() if cfg.markspace else None
    if section.builtin is not None:
        return get_problem_factory().create_problem(
            section.builtin,
            parameters=section.parameters or None,
            x0=section.x0,
            T=cfg.grid.T,
            markspace=markspace,
            controls=cfg.controls,
            budget=cfg.budget,
            coefficient_tables=tables or None,
        )
    if not tables:
        raise ConfigurationError("[coefficients] needs either a builtin name or coefficient tables")
    if section.x0 is None:
        raise ConfigurationError("[coefficients] x0 is required for a problem given by tables")
    return Problem(
        name="custom",
        x0=section.x0,
        T=cfg.grid.T if cfg.grid.T is not None else 1.0,
        coefficients=coefficients_from_tables(tables, section.parameters),
        markspace=markspace or MarkSpace.single(),
        controls=cfg.controls or ControlSet(),
        budget=cfg.budget or LipschitzBudget(),
        parameters=dict(section.parameters),
    )


def build_grid(cfg: RunConfig, problem: Problem) -> TimeGrid:
    return problem.grid(cfg.grid.steps)


def build_noise(cfg: RunConfig, problem: Problem) -> NoiseBundle:
    return generate_noise(
        build_grid(cfg, problem),
        problem.markspace,
        cfg.run.n_paths,
        cfg.run.seed,
        threads=cfg.run.threads,
        antithetic=cfg.run.antithetic,
        jump_coefficients_present=problem.coefficients.has_jumps,
    )


def require_oracle_control(problem: Problem) -> Callable[[Any], Any]:
    if problem.oracle is None or problem.oracle.control is None:
        raise ConfigurationError(f"Problem '{problem.name}' has no oracle control; choose candidate = \"zero\" or \"constant\"")
    return problem.oracle.control


def resolve_candidate(cfg: RunConfig, problem: Problem, grid: TimeGrid, n_paths: int) -> np.ndarray:
    """The candidate control u_bar on (path, step), plus `candidate_shift`.

    "auto" takes the oracle control when the problem has one and zero otherwise.
    """
    run = cfg.run
    candidate = run.candidate
    if candidate == "auto":
        candidate = "oracle" if problem.oracle is not None and problem.oracle.control is not None else "zero"
    match candidate:
        case "oracle":
            values = np.asarray(require_oracle_control(problem)(grid.knots[:-1]), dtype=np.float64)
        case "zero":
            values = np.zeros(grid.n_steps)
        case _:
            values = np.full(grid.n_steps, run.candidate_value)
    values = values + run.candidate_shift
    outside = ~problem.controls.contains(values)
    if outside.any():
        logger.warning(f"{problem.name}: candidate control leaves the control set on {int(outside.sum())} of {grid.n_steps} steps")
    return np.broadcast_to(values, (n_paths, grid.n_steps)).copy()
