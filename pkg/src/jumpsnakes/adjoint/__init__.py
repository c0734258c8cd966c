"""First- and second-order adjoint equations along a solved trajectory."""

from jumpsnakes.adjoint.export import write_adjoint_csv, write_guard_log
from jumpsnakes.adjoint.first_order import AdjointConfig, FirstOrderAdjoint, k1_profile, solve_first_order_adjoint
from jumpsnakes.adjoint.kalgebra import k_algebra, second_order_k_algebra
from jumpsnakes.adjoint.second_order import SecondOrderAdjoint, solve_second_order_adjoint

__all__: list[str] = [
    "write_adjoint_csv",
    "write_guard_log",
    "AdjointConfig",
    "FirstOrderAdjoint",
    "k1_profile",
    "solve_first_order_adjoint",
    "k_algebra",
    "second_order_k_algebra",
    "SecondOrderAdjoint",
    "solve_second_order_adjoint",
]
