"""
Tests for control sets, Lipschitz budgets and the problem declaration.
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from jumpsnakes.base.markspace import MarkSpace
from jumpsnakes.model.coefficients import Coefficients
from jumpsnakes.model.problem import ControlSet, LipschitzBudget, Problem


class TestControlSet:
    """Test box and finite control sets."""

    def test_box(self):
        box = ControlSet(u_min=-1.0, u_max=2.0)
        np.testing.assert_array_equal(box.contains([-1.0, 0.0, 2.0, 2.5]), [True, True, True, False])
        np.testing.assert_allclose(box.project([-3.0, 0.5, 9.0]), [-1.0, 0.5, 2.0])
        grid = box.sample_grid(4)
        np.testing.assert_allclose(grid, [-1.0, 0.0, 1.0, 2.0])

    def test_default_grid_size(self):
        assert ControlSet().sample_grid().size == 41

    def test_finite(self):
        finite = ControlSet(kind="finite", values=[1.0, -1.0, 0.0])
        np.testing.assert_array_equal(finite.sample_grid(), [-1.0, 0.0, 1.0])
        np.testing.assert_array_equal(finite.contains([0.0, 0.5]), [True, False])
        np.testing.assert_allclose(finite.project([0.4, 0.6, -7.0]), [0.0, 1.0, -1.0])

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"u_min": 1.0, "u_max": 0.0},
            {"u_min": -math.inf},
            {"kind": "finite", "values": []},
            {"kind": "finite", "values": [math.nan]},
            {"kind": "interval"},
            {"grid_size": 1},
            {"unknown": 1.0},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            ControlSet(**kwargs)


class TestLipschitzBudget:
    def test_C0(self):
        assert LipschitzBudget(L1=5.0, L2=0.1, L3=0.3, L4=0.2).C0 == 0.3

    def test_budget_term(self):
        """2 (2p)^{p/2} C0^p (1 + T^p) at p = 2."""
        budget = LipschitzBudget(L2=0.1)
        assert budget.budget_term(2.0, 1.0) == pytest.approx(2.0 * 4.0 * 0.01 * 2.0)

    def test_negative_constant(self):
        with pytest.raises(ValidationError):
            LipschitzBudget(L3=-0.1)


class TestProblem:
    """Test the problem declaration."""

    def test_grid(self, lq_problem):
        grid = lq_problem.grid(50)
        assert grid.T == lq_problem.T
        assert grid.n_steps == 50

    def test_with_overrides(self, lq_problem):
        changed = lq_problem.with_overrides(x0=3.0)
        assert changed.x0 == 3.0
        assert lq_problem.x0 == 1.0
        assert changed.coefficients is lq_problem.coefficients

    def test_C0(self):
        assert Problem(name="p", x0=0.0, T=1.0, coefficients=Coefficients(), markspace=MarkSpace.single(), budget=LipschitzBudget(L4=0.2)).C0 == 0.2

    @pytest.mark.parametrize("x0, T", [(0.0, 0.0), (math.nan, 1.0), (math.inf, 1.0)])
    def test_invalid(self, x0, T):
        with pytest.raises(ValueError):
            Problem(name="p", x0=x0, T=T, coefficients=Coefficients(), markspace=MarkSpace.single())
