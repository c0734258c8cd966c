"""Factory that turns registry tables into Problem objects."""

from __future__ import annotations

import difflib
import logging
from typing import Any, Optional

from jumpsnakes.base.exceptions import ProblemError, ProblemNotFoundError
from jumpsnakes.base.markspace import MarkSpace
from jumpsnakes.model.coefficients import AffineCoefficient, Coefficients, QuadraticTerminal
from jumpsnakes.model.database import ProblemDatabase, get_problem_database
from jumpsnakes.model.oracles import ORACLES, OracleBuilder
from jumpsnakes.model.problem import ControlSet, LipschitzBudget, Problem

logger: logging.Logger = logging.getLogger(__name__)


def _resolve(value: Any, parameters: dict[str, float], where: str) -> Any:
    """Replace a "$name" reference by its parameter value."""
    if isinstance(value, str) and value.startswith("$"):
        key = value[1:]
        if key not in parameters:
            raise ProblemError(f"{where} refers to unknown parameter '{key}'. Parameters: {sorted(parameters)}")
        return float(parameters[key])
    return value


def _resolve_table(table: Optional[dict[str, Any]], parameters: dict[str, float], where: str) -> dict[str, Any]:
    return {k: _resolve(v, parameters, f"{where}.{k}") for k, v in (table or {}).items()}


def coefficients_from_tables(tables: dict[str, Any], parameters: Optional[dict[str, float]] = None) -> Coefficients:
    """Build affine coefficients and a quadratic terminal from plain tables."""
    parameters = parameters or {}
    unknown = set(tables) - {"b", "sigma", "f", "g", "phi"}
    if unknown:
        raise ProblemError(f"Unknown coefficient tables: {sorted(unknown)}")
    try:
        built = {name: AffineCoefficient.from_table(_resolve_table(tables.get(name), parameters, name)) for name in ("b", "sigma", "f", "g")}
        phi = QuadraticTerminal.from_table(_resolve_table(tables.get("phi"), parameters, "phi"))
    except TypeError as e:
        raise ProblemError(f"Malformed coefficient table: {e}") from e
    return Coefficients(phi=phi, **built)


class ProblemFactory:
    """Creates builtin problems by name, with parameter and component overrides."""

    def __init__(self, database: ProblemDatabase) -> None:
        self.database: ProblemDatabase = database
        self._oracles: dict[str, OracleBuilder] = {}
        self._register_default_oracles()

    def _register_default_oracles(self) -> None:
        for name, builder in ORACLES.items():
            self.register_oracle(name, builder)

    def register_oracle(self, name: str, builder: OracleBuilder) -> None:
        self._oracles[name] = builder

    def _get_similar_problems(self, name: str, n: int = 3) -> list[str]:
        return difflib.get_close_matches(name, self.database.list_problems(), n=n, cutoff=0.6)

    def list_problems(self) -> list[str]:
        return self.database.list_problems()

    # 🌟 - Create problem
    def create_problem(
        self,
        name: str,
        *,
        parameters: Optional[dict[str, float]] = None,
        x0: Optional[float] = None,
        T: Optional[float] = None,
        markspace: Optional[MarkSpace] = None,
        controls: Optional[ControlSet] = None,
        budget: Optional[LipschitzBudget] = None,
        coefficient_tables: Optional[dict[str, dict[str, Any]]] = None,
    ) -> Problem:
        """Create the named builtin problem.

        Args:
            name: registry name, e.g. "lq_jump"
            parameters: overrides for the named parameters referenced by "$name" entries
            coefficient_tables: per-coefficient tables replacing the registry's tables
        Raises:
            ProblemNotFoundError: when the name is not registered
        """
        table = self.database.get_problem_data(name)
        if table is None:
            error_msg = f"Problem '{name}' not found"
            similar = self._get_similar_problems(name)
            if similar:
                suggestions = "', '".join(similar)
                error_msg += f".\nTry: '{suggestions}'?"
            error_msg += f"\nAvailable problems: {', '.join(self.database.list_problems())}"
            raise ProblemNotFoundError(error_msg)

        merged: dict[str, float] = {k: float(v) for k, v in table.get("parameters", {}).items()}
        for key, value in (parameters or {}).items():
            if key not in merged:
                raise ProblemError(f"Problem '{name}' has no parameter '{key}'. Parameters: {sorted(merged)}")
            merged[key] = float(value)

        tables = dict(table["coefficients"])
        tables.update(coefficient_tables or {})
        custom = bool(coefficient_tables)

        problem = Problem(
            name=name,
            x0=float(table["x0"]) if x0 is None else float(x0),
            T=float(table["T"]) if T is None else float(T),
            coefficients=coefficients_from_tables(tables, merged),
            markspace=markspace or MarkSpace.from_config(**table["markspace"]),
            controls=controls or ControlSet(**table.get("controls", {})),
            budget=budget or LipschitzBudget(**table.get("budget", {})),
            parameters=merged,
        )

        oracle_name = table.get("oracle")
        if oracle_name and not custom:
            builder = self._oracles.get(oracle_name)
            if builder is None:
                logger.warning(f"No oracle registered under '{oracle_name}' for problem '{name}'")
            else:
                problem = problem.with_overrides(oracle=builder(problem))
        return problem


# Global singleton
_problem_factory: Optional[ProblemFactory] = None


def get_problem_factory() -> ProblemFactory:
    """Get the global problem factory."""
    global _problem_factory
    if _problem_factory is None:
        _problem_factory = ProblemFactory(get_problem_database())
    return _problem_factory


def builtin_problem(name: str, **parameters: float) -> Problem:
    """Create a builtin problem, e.g. `builtin_problem("linear_forward", a=0.2)`."""
    return get_problem_factory().create_problem(name, parameters=parameters)


def list_problems() -> list[str]:
    return get_problem_factory().list_problems()
