"""Problem declarations, the builtin registry and its oracles."""

from jumpsnakes.model.coefficients import (
    AffineCoefficient,
    CallableCoefficient,
    CallableTerminal,
    Coefficient,
    Coefficients,
    QuadraticTerminal,
    Terminal,
    TrajectoryPoint,
)
from jumpsnakes.model.database import ProblemDatabase, get_problem_database
from jumpsnakes.model.factory import ProblemFactory, builtin_problem, get_problem_factory, list_problems
from jumpsnakes.model.problem import ControlSet, LipschitzBudget, Problem, ProblemOracle
from jumpsnakes.model.validation import ValidationReport, validate_problem

__all__: list[str] = [
    "AffineCoefficient",
    "CallableCoefficient",
    "CallableTerminal",
    "Coefficient",
    "Coefficients",
    "QuadraticTerminal",
    "Terminal",
    "TrajectoryPoint",
    "ProblemDatabase",
    "get_problem_database",
    "ProblemFactory",
    "builtin_problem",
    "get_problem_factory",
    "list_problems",
    "ControlSet",
    "LipschitzBudget",
    "Problem",
    "ProblemOracle",
    "ValidationReport",
    "validate_problem",
]
