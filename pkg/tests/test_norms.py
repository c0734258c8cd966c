"""
Tests for the Monte Carlo norm estimates.
"""

import numpy as np
import pytest

from jumpsnakes.fbsolve.norms import lp_norm_report
from jumpsnakes.fbsolve.picard import picard_solve


class TestLpNormReport:
    def test_zero_problem(self, zero_problem, small_noise):
        sol = picard_solve(zero_problem, np.zeros((256, 20)), small_noise)
        report = lp_norm_report(sol, zero_problem, small_noise)
        assert report.sup_x == pytest.approx(1.0)
        assert report.sup_y == 0.0
        assert report.z_energy == 0.0
        assert report.jump_energy == 0.0
        assert report.data["x0"] == 1.0
        assert report.data["sigma0"] == 0.0

    def test_lq_data_side(self, lq_problem, lq_noise, oracle_control):
        """sigma = sigma0 gives int int sigma^2 dnu dt = sigma0^2 lambda T on every path."""
        sol = picard_solve(lq_problem, oracle_control(lq_problem, lq_noise), lq_noise)
        report = lp_norm_report(sol, lq_problem, lq_noise, p=2.0)
        assert report.data["sigma0"] == pytest.approx(0.09)
        assert report.data["f0"] == 0.0
        assert report.data["phi0"] == 0.0
        assert report.sup_x >= 1.0
        assert set(report.solution_side()) == {"sup_x", "sup_y", "z_energy", "jump_energy"}

    def test_higher_moment_dominates(self, lq_problem, lq_noise, oracle_control):
        """By Jensen, E sup|X|^4 >= (E sup|X|^2)^2."""
        sol = picard_solve(lq_problem, oracle_control(lq_problem, lq_noise), lq_noise)
        second = lp_norm_report(sol, lq_problem, lq_noise, p=2.0)
        fourth = lp_norm_report(sol, lq_problem, lq_noise, p=4.0)
        assert fourth.sup_x >= second.sup_x**2

    def test_p_below_two(self, zero_problem, small_noise):
        sol = picard_solve(zero_problem, np.zeros((256, 20)), small_noise)
        with pytest.raises(ValueError):
            lp_norm_report(sol, zero_problem, small_noise, p=1.5)
