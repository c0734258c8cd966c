"""Coupled forward-backward SDEs with Poisson jumps and empirical checks of the stochastic maximum principle."""

from jumpsnakes.adjoint import AdjointConfig, FirstOrderAdjoint, SecondOrderAdjoint, solve_first_order_adjoint, solve_second_order_adjoint
from jumpsnakes.base import ConfigurationError, JumpsnakesError, MarkSpace, NoiseBundle, RegressionConfig, SingularityError, TimeGrid, generate_noise
from jumpsnakes.fbsolve import CostEstimate, FBSDEPSolution, PicardConfig, PicardReport, evaluate_cost, picard_solve
from jumpsnakes.main import main
from jumpsnakes.maxprinciple import (
    ExpansionReport,
    MPConfig,
    MPReport,
    OrderFit,
    SpikeConfig,
    build_spike_control,
    expansion_check,
    order_experiment,
    spike_cost_gap,
    verify_mp,
)
from jumpsnakes.model import ControlSet, Problem, builtin_problem, list_problems, validate_problem

__version__: str = "0.1.0"

__all__: list[str] = [
    "__version__",
    "main",
    "AdjointConfig",
    "FirstOrderAdjoint",
    "SecondOrderAdjoint",
    "solve_first_order_adjoint",
    "solve_second_order_adjoint",
    "ConfigurationError",
    "JumpsnakesError",
    "MarkSpace",
    "NoiseBundle",
    "RegressionConfig",
    "SingularityError",
    "TimeGrid",
    "generate_noise",
    "CostEstimate",
    "FBSDEPSolution",
    "PicardConfig",
    "PicardReport",
    "evaluate_cost",
    "picard_solve",
    "ExpansionReport",
    "MPConfig",
    "MPReport",
    "OrderFit",
    "SpikeConfig",
    "build_spike_control",
    "expansion_check",
    "order_experiment",
    "spike_cost_gap",
    "verify_mp",
    "ControlSet",
    "Problem",
    "builtin_problem",
    "list_problems",
    "validate_problem",
]
