"""Forward simulation, backward regression and the Picard solver of the coupled system."""

from jumpsnakes.fbsolve.backward import BackwardResult, backward_sweep, solve_backward
from jumpsnakes.fbsolve.export import solution_table, write_solution_csv
from jumpsnakes.fbsolve.forward import simulate_forward
from jumpsnakes.fbsolve.norms import NormReport, lp_norm_report
from jumpsnakes.fbsolve.picard import CostEstimate, FBSDEPSolution, PicardConfig, PicardReport, evaluate_cost, picard_solve
from jumpsnakes.fbsolve.processes import BackwardTriple

__all__: list[str] = [
    "BackwardResult",
    "backward_sweep",
    "solve_backward",
    "solution_table",
    "write_solution_csv",
    "simulate_forward",
    "NormReport",
    "lp_norm_report",
    "CostEstimate",
    "FBSDEPSolution",
    "PicardConfig",
    "PicardReport",
    "evaluate_cost",
    "picard_solve",
    "BackwardTriple",
]
