"""
Shared fixtures for the jumpsnakes test suite.
"""

import numpy as np
import pytest

from jumpsnakes.adjoint.first_order import solve_first_order_adjoint
from jumpsnakes.adjoint.second_order import solve_second_order_adjoint
from jumpsnakes.base.markspace import MarkSpace
from jumpsnakes.base.noise import NoiseBundle, TimeGrid, generate_noise
from jumpsnakes.fbsolve.picard import picard_solve
from jumpsnakes.model.factory import builtin_problem, coefficients_from_tables
from jumpsnakes.model.problem import Problem


@pytest.fixture
def small_grid() -> TimeGrid:
    """Twenty steps on [0, 1]."""
    return TimeGrid(T=1.0, n_steps=20)


@pytest.fixture
def unit_markspace() -> MarkSpace:
    """One mark e = 1 with intensity 1."""
    return MarkSpace.single()


@pytest.fixture
def two_mark_space() -> MarkSpace:
    """Marks 0.5 and 1.5 with intensity 0.5 each."""
    return MarkSpace.from_config([0.5, 1.5], [0.5, 0.5])


@pytest.fixture
def small_noise(small_grid, unit_markspace) -> NoiseBundle:
    """A few hundred paths on the small grid."""
    return generate_noise(small_grid, unit_markspace, n_paths=256, seed=11)


@pytest.fixture
def zero_problem() -> Problem:
    return builtin_problem("zero")


@pytest.fixture
def lq_problem() -> Problem:
    return builtin_problem("lq_jump")


@pytest.fixture
def diffusion_problem() -> Problem:
    return builtin_problem("controlled_diffusion")


@pytest.fixture
def lq_noise(lq_problem) -> NoiseBundle:
    return generate_noise(lq_problem.grid(40), lq_problem.markspace, n_paths=1000, seed=3)


def _oracle_control(problem: Problem, noise: NoiseBundle, shift: float = 0.0) -> np.ndarray:
    values = np.asarray(problem.oracle.control(noise.grid.knots[:-1]), dtype=np.float64) + shift
    return np.broadcast_to(values, (noise.n_paths, noise.n_steps)).copy()


def _table_problem(tables: dict, x0: float = 1.0, T: float = 1.0, markspace: MarkSpace = None, name: str = "table") -> Problem:
    return Problem(
        name=name,
        x0=x0,
        T=T,
        coefficients=coefficients_from_tables(tables),
        markspace=markspace or MarkSpace.single(),
    )


@pytest.fixture
def linear_forward_problem() -> Problem:
    return builtin_problem("linear_forward")


@pytest.fixture
def oracle_control():
    """The problem's oracle control on every (path, step), shifted by a constant."""
    return _oracle_control


@pytest.fixture
def table_problem():
    """A problem built from affine coefficient tables, without oracle."""
    return _table_problem


def _reference(problem: Problem, control: np.ndarray, noise: NoiseBundle):
    sol = picard_solve(problem, control, noise)
    fo = solve_first_order_adjoint(problem, sol, control, noise)
    so = solve_second_order_adjoint(problem, sol, fo, control, noise)
    return sol, fo, so


@pytest.fixture
def reference():
    """State solution with both adjoints for a control: (sol, fo, so)."""
    return _reference


@pytest.fixture
def lq_reference(lq_problem, lq_noise):
    """Oracle control of the LQ benchmark with its state solution and adjoints."""
    control = _oracle_control(lq_problem, lq_noise)
    return (control, *_reference(lq_problem, control, lq_noise))
