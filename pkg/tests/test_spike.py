"""
Tests for spike windows, spiked controls and the paired cost gap.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from jumpsnakes.base.exceptions import ConfigurationError, NotConvergedError
from jumpsnakes.base.noise import TimeGrid
from jumpsnakes.fbsolve.picard import PicardConfig, picard_solve
from jumpsnakes.maxprinciple.spike import (
    SpikeConfig,
    build_spike_control,
    effective_epsilon,
    replacement_values,
    spike_anchor,
    spike_cost_gap,
    spike_mask,
    spike_window,
)


class TestSpikeConfig:
    def test_check(self):
        cfg = SpikeConfig(t_bar=0.5, epsilon=0.5)
        assert cfg.check(1.0) is cfg

    @pytest.mark.parametrize("t_bar, epsilon", [(1.0, 0.0), (0.9, 0.2)])
    def test_outside_horizon(self, t_bar, epsilon):
        with pytest.raises(ConfigurationError):
            SpikeConfig(t_bar=t_bar, epsilon=epsilon).check(1.0)

    def test_negative_values(self):
        with pytest.raises(ValidationError):
            SpikeConfig(epsilon=-0.1)

    def test_with_epsilon(self):
        cfg = SpikeConfig(t_bar=0.2, replacement=1.0).with_epsilon(0.05)
        assert cfg.epsilon == 0.05
        assert cfg.t_bar == 0.2
        assert cfg.replacement == 1.0


class TestSpikeWindow:
    """Test the step-granular window."""

    def test_window_steps(self, small_grid):
        window = spike_window(small_grid, SpikeConfig(t_bar=0.5, epsilon=0.1))
        assert np.flatnonzero(window).tolist() == [10, 11]
        assert effective_epsilon(small_grid, SpikeConfig(t_bar=0.5, epsilon=0.1)) == pytest.approx(0.1)

    def test_partial_step_is_dropped(self, small_grid):
        """Only whole steps inside the window count."""
        cfg = SpikeConfig(t_bar=0.5, epsilon=0.07)
        assert np.flatnonzero(spike_window(small_grid, cfg)).tolist() == [10]
        assert effective_epsilon(small_grid, cfg) == pytest.approx(0.05)

    def test_window_narrower_than_a_step(self, small_grid, small_noise):
        cfg = SpikeConfig(t_bar=0.5, epsilon=0.02)
        assert effective_epsilon(small_grid, cfg) == 0.0
        control = np.ones((256, 20))
        np.testing.assert_array_equal(build_spike_control(control, cfg, small_noise), control)

    def test_mask_skips_jump_steps(self, small_noise):
        cfg = SpikeConfig(t_bar=0.0, epsilon=1.0)
        mask = spike_mask(small_noise, cfg)
        np.testing.assert_array_equal(mask, ~small_noise.jump_step_mask())

    @pytest.mark.parametrize("t_bar, anchor", [(0.5, 10), (0.52, 10), (0.0, 0), (0.95, 19)])
    def test_anchor(self, small_grid, t_bar, anchor):
        assert spike_anchor(small_grid, SpikeConfig(t_bar=t_bar)) == anchor

    def test_anchor_on_a_knot_with_rounding(self):
        grid = TimeGrid(T=1.0, n_steps=30)
        assert spike_anchor(grid, SpikeConfig(t_bar=0.3)) == 9


class TestSpikeControl:
    def test_constant_replacement(self, small_noise):
        cfg = SpikeConfig(t_bar=0.5, epsilon=0.1, replacement=2.0)
        control = build_spike_control(np.zeros((256, 20)), cfg, small_noise)
        mask = spike_mask(small_noise, cfg)
        np.testing.assert_array_equal(control[mask], 2.0)
        np.testing.assert_array_equal(control[~mask], 0.0)

    def test_state_dependent_replacement(self, small_grid):
        cfg = SpikeConfig(t_bar=0.5, replacement=1.0, state_slope=2.0)
        state = np.tile(np.arange(21, dtype=float), (3, 1))
        np.testing.assert_allclose(replacement_values(cfg, small_grid, state, 3), 21.0)
        with pytest.raises(ConfigurationError):
            replacement_values(cfg, small_grid, None, 3)


class TestSpikeCostGap:
    """Test J(u^eps) - J(u) on the LQ benchmark, where it is known in closed form."""

    def test_lq_gap_is_exact(self, lq_problem, lq_noise, oracle_control):
        """Around the optimal control the gap is sum over perturbed steps of dt (d^2 / 2 - c dt d)."""
        control = oracle_control(lq_problem, lq_noise)
        cfg = SpikeConfig(t_bar=0.5, epsilon=0.1, replacement=0.0)
        gap = spike_cost_gap(lq_problem, control, cfg, lq_noise)
        mask = spike_mask(lq_noise, cfg)
        d = np.where(mask, 0.0 - control, 0.0)
        dt, c = lq_noise.grid.dt, 0.5
        expected = float(np.mean((dt * (0.5 * d**2 - c * dt * d)).sum(axis=1)))
        assert gap.gap == pytest.approx(expected, rel=1e-8)
        assert gap.gap > 0.0
        assert gap.epsilon_effective == pytest.approx(0.1)
        assert gap.perturbed_fraction == pytest.approx(mask.mean())
        assert 0.0 < gap.excluded_fraction < 0.1
        assert gap.converged

    def test_reuses_reference(self, lq_problem, lq_noise, oracle_control):
        control = oracle_control(lq_problem, lq_noise)
        bar = picard_solve(lq_problem, control, lq_noise)
        cfg = SpikeConfig(t_bar=0.25, epsilon=0.1, replacement=1.0)
        assert spike_cost_gap(lq_problem, control, cfg, lq_noise, reference=bar).gap == pytest.approx(spike_cost_gap(lq_problem, control, cfg, lq_noise).gap, rel=1e-12)

    def test_empty_window(self, lq_problem, lq_noise, oracle_control):
        gap = spike_cost_gap(lq_problem, oracle_control(lq_problem, lq_noise), SpikeConfig(t_bar=0.5, epsilon=0.01), lq_noise)
        assert gap.gap == 0.0
        assert gap.epsilon_effective == 0.0

    def test_not_converged(self, lq_problem, lq_noise, oracle_control):
        control = oracle_control(lq_problem, lq_noise)
        cfg = SpikeConfig(t_bar=0.5, epsilon=0.1)
        with pytest.raises(NotConvergedError):
            spike_cost_gap(lq_problem, control, cfg, lq_noise, picard_cfg=PicardConfig(tol=1e-300, max_iter=1))
        gap = spike_cost_gap(lq_problem, control, cfg, lq_noise, picard_cfg=PicardConfig(tol=1e-300, max_iter=1, allow_unconverged=True))
        assert not gap.converged
