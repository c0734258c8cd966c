"""
Tests for the finite-difference audit of declared derivatives.
"""

import numpy as np
import pytest

from jumpsnakes.base.exceptions import ValidationFailure
from jumpsnakes.base.markspace import MarkSpace
from jumpsnakes.model.coefficients import AffineCoefficient, CallableCoefficient, CallableTerminal, Coefficients
from jumpsnakes.model.factory import builtin_problem
from jumpsnakes.model.problem import LipschitzBudget, Problem
from jumpsnakes.model.validation import validate_problem


def _problem(**coefficients) -> Problem:
    return Problem(name="audited", x0=1.0, T=1.0, coefficients=Coefficients(**coefficients), markspace=MarkSpace.single())


class TestValidateBuiltins:
    @pytest.mark.parametrize("name", ["zero", "linear_forward", "linear_bsde", "coupled_small", "lq_jump", "controlled_diffusion"])
    def test_builtins_pass(self, name):
        report = validate_problem(builtin_problem(name))
        assert report.passed
        assert report.findings == []
        assert report.max_abs_f_z == 0.0

    def test_report_contents(self):
        report = validate_problem(builtin_problem("coupled_small"), sample_count=16, seed=3)
        assert report.sample_count == 16
        assert report.seed == 3
        assert set(report.lipschitz_ratios) == {"b", "sigma", "f", "g"}
        assert report.lipschitz_ratios["b"]["y"] == pytest.approx(0.1)
        assert report.C0 == pytest.approx(0.1)
        assert report.budget_term_p2 == pytest.approx(2.0 * 4.0 * 0.01 * 2.0)
        assert report.budget_exceeded == []


class TestValidateFailures:
    """Test that wrong declarations are caught."""

    @pytest.fixture
    def wrong_gradient(self) -> CallableCoefficient:
        """Declares d/dx x^2 = x."""
        return CallableCoefficient(
            value_fn=lambda t, x, y, z, zt, u, e: x * x,
            gradient_fn=lambda t, x, y, z, zt, u, e: (x, 0.0, 0.0, 0.0),
            hessian_fn=lambda t, x, y, z, zt, u, e: ((1.0, 0.0, 0.0, 0.0),) + ((0.0, 0.0, 0.0, 0.0),) * 3,
        )

    def test_wrong_gradient_raises(self, wrong_gradient):
        with pytest.raises(ValidationFailure) as exc_info:
            validate_problem(_problem(g=wrong_gradient))
        report = exc_info.value.report
        assert not report.passed
        assert any(f.coefficient == "g" and f.argument == "x" and f.order == 1 for f in report.findings)
        assert "g_x" in str(exc_info.value)

    def test_non_strict_returns_report(self, wrong_gradient):
        report = validate_problem(_problem(g=wrong_gradient), strict=False)
        assert not report.passed
        # the declared Hessian matches the declared gradient
        assert not any(f.order == 2 for f in report.findings)

    def test_wrong_hessian(self):
        psi = CallableCoefficient(
            value_fn=lambda t, x, y, z, zt, u, e: x**3,
            gradient_fn=lambda t, x, y, z, zt, u, e: (3.0 * x * x, 0.0, 0.0, 0.0),
        )
        report = validate_problem(_problem(b=psi), strict=False)
        assert any(f.coefficient == "b" and f.argument == "x,x" and f.order == 2 for f in report.findings)

    def test_jump_coefficient_depending_on_z(self):
        """A callable f that secretly uses Z is caught numerically."""
        f = CallableCoefficient(
            value_fn=lambda t, x, y, z, zt, u, e: 0.5 * z,
            gradient_fn=lambda t, x, y, z, zt, u, e: (0.0, 0.0, 0.0, 0.0),
        )
        report = validate_problem(_problem(f=f), strict=False)
        assert report.max_abs_f_z == pytest.approx(0.5)
        assert any(f.coefficient == "f" and f.argument == "z" for f in report.findings)

    def test_wrong_terminal_derivative(self):
        phi = CallableTerminal(value_fn=lambda x: x * x, dx_fn=lambda x: x, dxx_fn=lambda x: 1.0)
        with pytest.raises(ValidationFailure) as exc_info:
            validate_problem(_problem(phi=phi))
        assert any(f.coefficient == "phi" for f in exc_info.value.report.findings)

    def test_budget_exceeded_is_reported(self, caplog):
        """Lipschitz constants above the budget are logged, not failed."""
        problem = _problem(b=AffineCoefficient(y=0.5)).with_overrides(budget=LipschitzBudget(L2=0.1))
        report = validate_problem(problem)
        assert report.passed
        assert report.budget_exceeded and "b_y" in report.budget_exceeded[0]
        assert "b_y" in caplog.text

    def test_growth_budget_exceeded_is_reported(self, caplog):
        problem = _problem(b=AffineCoefficient(const=20.0)).with_overrides(budget=LipschitzBudget(growth=1.0))
        report = validate_problem(problem)
        assert report.passed
        assert any(line.startswith("b growth") for line in report.budget_exceeded)
        assert "b growth" in caplog.text

    def test_undeclared_growth_is_not_compared(self):
        report = validate_problem(_problem(b=AffineCoefficient(const=20.0)))
        assert report.growth_constants["b"] > 1.0
        assert not any("growth" in line for line in report.budget_exceeded)

    def test_deterministic(self):
        problem = builtin_problem("controlled_diffusion")
        assert validate_problem(problem, seed=4).model_dump() == validate_problem(problem, seed=4).model_dump()
