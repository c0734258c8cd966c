"""
Tests for the epsilon-order experiments.
"""

import numpy as np
import pytest

from jumpsnakes.base.exceptions import ConfigurationError
from jumpsnakes.base.noise import generate_noise
from jumpsnakes.maxprinciple.orders import OrderConfig, OrderFit, check_epsilons, expected_slope, order_experiment
from jumpsnakes.maxprinciple.spike import SpikeConfig
from jumpsnakes.model.factory import get_problem_factory

EPSILONS = [0.2, 0.1, 0.05, 0.025]
SPIKE = SpikeConfig(t_bar=0.5, replacement=0.0)


class TestCheckEpsilons:
    def test_valid(self):
        assert check_epsilons([0.4, 0.2, 0.1, 0.05], T=1.0, t_bar=0.5) == [0.4, 0.2, 0.1, 0.05]

    @pytest.mark.parametrize(
        "epsilons, message",
        [
            ([0.2, 0.1, 0.05], "at least 4"),
            ([0.2, 0.1, 0.0, -0.1], "positive"),
            ([0.1, 0.2, 0.4, 0.8], "decrease"),
            ([0.2, 0.1, 0.04, 0.02], "geometrically"),
        ],
    )
    def test_invalid(self, epsilons, message):
        with pytest.raises(ConfigurationError) as exc_info:
            check_epsilons(epsilons)
        assert message in str(exc_info.value)

    def test_window_leaves_horizon(self):
        with pytest.raises(ConfigurationError) as exc_info:
            check_epsilons([0.8, 0.4, 0.2, 0.1], T=1.0, t_bar=0.5)
        assert "horizon" in str(exc_info.value)


class TestExpectedSlope:
    @pytest.mark.parametrize(
        "selector, beta, slope",
        [("forward_gap", 2.0, 1.0), ("backward_gap", 4.0, 2.0), ("first_variation", 2.0, 1.0), ("remainder", 2.0, 2.0), ("remainder", 3.0, 3.0)],
    )
    def test_slopes(self, selector, beta, slope):
        assert expected_slope(selector, beta) == slope

    def test_config_defaults(self):
        cfg = OrderConfig()
        assert cfg.selectors == ["forward_gap", "remainder"]
        check_epsilons(cfg.epsilons)

    def test_within_band(self):
        fit = OrderFit(
            selector="forward_gap",
            beta=2.0,
            epsilons=EPSILONS,
            epsilons_effective=EPSILONS,
            statistics=[1.0] * 4,
            standard_errors=[0.0] * 4,
            slope=1.1,
            expected_slope=1.0,
            band=0.15,
        )
        assert fit.within_band is True
        assert fit.model_copy(update={"slope": 1.2}).within_band is False
        assert fit.model_copy(update={"inconclusive": True}).within_band is None
        header, rows = fit.table()
        assert header == ["epsilon", "statistic", "se"]
        assert rows.shape == (4, 3)


class TestOrderExperiment:
    def test_unknown_selector(self, lq_problem, lq_noise, oracle_control):
        with pytest.raises(ConfigurationError) as exc_info:
            order_experiment(lq_problem, oracle_control(lq_problem, lq_noise), "sideways", EPSILONS, SPIKE, lq_noise)
        assert "forward_gap" in str(exc_info.value)

    def test_lq_forward_gap_is_second_order(self, lq_problem, lq_noise, lq_reference):
        """Control only in the drift: X^eps - X is a drift integral, so sup|.|^2 scales like eps^2."""
        control, sol, _, _ = lq_reference
        fit = order_experiment(lq_problem, control, "forward_gap", EPSILONS, SPIKE, lq_noise, reference=sol)
        assert not fit.inconclusive
        assert fit.slope == pytest.approx(2.0, abs=0.1)
        assert fit.within_band is False
        assert fit.epsilons_effective == pytest.approx(EPSILONS)

    def test_lq_remainder(self, lq_problem, lq_noise, lq_reference):
        control, sol, fo, _ = lq_reference
        fit = order_experiment(lq_problem, control, "remainder", EPSILONS, SPIKE, lq_noise, reference=sol, first_order=fo)
        assert fit.expected_slope == 2.0
        assert fit.within_band is True

    def test_lq_first_variation_is_inconclusive(self, lq_problem, lq_noise, lq_reference, caplog):
        control, sol, fo, _ = lq_reference
        fit = order_experiment(lq_problem, control, "first_variation", EPSILONS, SPIKE, lq_noise, reference=sol, first_order=fo)
        assert fit.inconclusive
        assert fit.slope is None
        assert fit.within_band is None
        assert "inconclusive" in caplog.text

    def test_threads_do_not_change_results(self, lq_problem, lq_noise, lq_reference):
        control, sol, _, _ = lq_reference
        serial = order_experiment(lq_problem, control, "forward_gap", EPSILONS, SPIKE, lq_noise, reference=sol)
        threaded = order_experiment(lq_problem, control, "forward_gap", EPSILONS, SPIKE, lq_noise, reference=sol, threads=4)
        assert threaded.statistics == serial.statistics


@pytest.mark.slow
class TestControlledDiffusionOrders:
    """Control in the diffusion makes the forward gap first order in epsilon."""

    @pytest.fixture
    def setup(self, oracle_control):
        problem = get_problem_factory().create_problem("controlled_diffusion", parameters={"kappa": 1.0})
        noise = generate_noise(problem.grid(200), problem.markspace, n_paths=4000, seed=21)
        return problem, noise, oracle_control(problem, noise)

    def test_forward_gap(self, setup):
        problem, noise, control = setup
        fit = order_experiment(problem, control, "forward_gap", [0.08, 0.04, 0.02, 0.01], SPIKE, noise)
        assert fit.within_band
        assert fit.r_squared > 0.99

    def test_remainder(self, setup):
        problem, noise, control = setup
        fit = order_experiment(problem, control, "remainder", [0.08, 0.04, 0.02, 0.01], SPIKE, noise)
        assert fit.within_band
