"""Base classes and utilities for `jumpsnakes`"""

from jumpsnakes.base.exceptions import (
    BoundednessError,
    ConfigurationError,
    ContractionError,
    DimensionError,
    DivergenceError,
    EmptyBundleError,
    FixedPointError,
    GuardViolation,
    ImplicitStepError,
    InvalidParameterError,
    JumpsnakesError,
    NoiseIndexError,
    NotConvergedError,
    ProblemError,
    ProblemNotFoundError,
    RegressionError,
    SingularityError,
    SolverError,
    ValidationFailure,
)
from jumpsnakes.base.markspace import MarkSpace, MarkVector, integrate, integrate_marks, l2_norm, l2_norm_marks
from jumpsnakes.base.noise import NoiseBundle, TimeGrid, compensated_increment, generate_noise
from jumpsnakes.base.regression import RegressionConfig, Regressor, polynomial_features
from jumpsnakes.base.reports import ReportEnvelope, write_report, write_table

__all__: list[str] = [
    "BoundednessError",
    "ConfigurationError",
    "ContractionError",
    "DimensionError",
    "DivergenceError",
    "EmptyBundleError",
    "FixedPointError",
    "GuardViolation",
    "ImplicitStepError",
    "InvalidParameterError",
    "JumpsnakesError",
    "NoiseIndexError",
    "NotConvergedError",
    "ProblemError",
    "ProblemNotFoundError",
    "RegressionError",
    "SingularityError",
    "SolverError",
    "ValidationFailure",
    "MarkSpace",
    "MarkVector",
    "integrate",
    "integrate_marks",
    "l2_norm",
    "l2_norm_marks",
    "NoiseBundle",
    "TimeGrid",
    "compensated_increment",
    "generate_noise",
    "RegressionConfig",
    "Regressor",
    "polynomial_features",
    "ReportEnvelope",
    "write_report",
    "write_table",
]
