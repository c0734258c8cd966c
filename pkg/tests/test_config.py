"""
Tests for run configuration files, command-line overrides and what they build.
"""

import logging

import numpy as np
import pytest

from jumpsnakes.base.exceptions import ConfigurationError, ProblemError
from jumpsnakes.config import (
    DEFAULT_OUT,
    RunConfig,
    SpikeSection,
    apply_overrides,
    build_noise,
    build_problem,
    load_config,
    parse_config,
    resolve_candidate,
)

LQ_CONFIG = """
[coefficients]
builtin = "lq_jump"

[coefficients.parameters]
c = 1.0

[grid]
steps = 10

[run]
n_paths = 64
seed = 7
"""

CUSTOM_CONFIG = """
[coefficients]
x0 = 2.0

[coefficients.b]
u = 1.0

[coefficients.g]
uu = 1.0

[coefficients.phi]
c1 = 1.0

[markspace]
marks = [0.5, 1.5]
weights = [0.25, 0.75]

[grid]
steps = 8
T = 0.5
"""


class TestParseConfig:
    def test_defaults(self):
        cfg = parse_config("")
        assert cfg.grid.steps == 200
        assert cfg.run.n_paths == 10_000
        assert cfg.run.out == DEFAULT_OUT
        assert cfg.run.candidate == "auto"
        assert cfg.mp.grid_points == 41

    def test_sections(self):
        cfg = parse_config(LQ_CONFIG)
        assert cfg.coefficients.builtin == "lq_jump"
        assert cfg.coefficients.parameters == {"c": 1.0}
        assert cfg.run.seed == 7
        assert cfg.grid.steps == 10

    def test_error_names_line(self):
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config("[grid]\nsteps = 10\n\n[run]\nn_paths = 0\n", source="run.toml")
        assert "run.toml:5: run.n_paths" in str(exc_info.value)

    def test_unknown_section(self):
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config("[run]\nseed = 1\n[bogus]\nx = 1\n", source="run.toml")
        assert "run.toml:3: bogus" in str(exc_info.value)

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config("[spike]\nt_bar = 0.2\nwidth = 0.1\n")
        assert "spike.width" in str(exc_info.value)

    def test_invalid_toml(self):
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config("[run\nseed = 1")
        assert "invalid TOML" in str(exc_info.value)

    def test_markspace_lengths(self):
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config("[markspace]\nmarks = [1.0, 2.0]\nweights = [1.0]\n")
        assert "2 marks but 1 weights" in str(exc_info.value)

    def test_resolved_has_every_section(self):
        resolved = parse_config(LQ_CONFIG).resolved()
        for section in ("coefficients", "grid", "run", "regression", "picard", "adjoint", "spike", "mp", "order", "expansion"):
            assert section in resolved


class TestLoadConfig:
    def test_load(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text(LQ_CONFIG, encoding="utf-8")
        assert load_config(path).run.seed == 7

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError) as exc_info:
            load_config(tmp_path / "missing.toml")
        assert "Cannot read config file" in str(exc_info.value)


class TestOverrides:
    def test_values_replace_file(self):
        cfg = apply_overrides(parse_config(LQ_CONFIG), seed=3, paths=128, steps=16, out="elsewhere", threads=2, problem="linear_bsde")
        assert cfg.run.seed == 3
        assert cfg.run.n_paths == 128
        assert cfg.run.out == "elsewhere"
        assert cfg.run.threads == 2
        assert cfg.grid.steps == 16
        assert cfg.coefficients.builtin == "linear_bsde"

    def test_none_keeps_file(self):
        cfg = apply_overrides(parse_config(LQ_CONFIG))
        assert cfg.run.seed == 7
        assert cfg.grid.steps == 10

    def test_invalid_override(self):
        with pytest.raises(ConfigurationError) as exc_info:
            apply_overrides(parse_config(LQ_CONFIG), paths=0)
        assert "Invalid command-line override" in str(exc_info.value)


class TestBuildProblem:
    def test_builtin_with_parameters(self):
        problem = build_problem(parse_config(LQ_CONFIG))
        assert problem.name == "lq_jump"
        assert problem.parameters["c"] == 1.0
        assert problem.oracle is not None

    def test_builtin_horizon(self):
        problem = build_problem(parse_config('[coefficients]\nbuiltin = "lq_jump"\n[grid]\nT = 2.0\n'))
        assert problem.T == 2.0

    def test_unknown_parameter(self):
        with pytest.raises(ProblemError):
            build_problem(parse_config('[coefficients]\nbuiltin = "lq_jump"\n[coefficients.parameters]\nkappa = 1.0\n'))

    def test_custom_tables(self):
        problem = build_problem(parse_config(CUSTOM_CONFIG))
        assert problem.name == "custom"
        assert problem.x0 == 2.0
        assert problem.T == 0.5
        assert problem.oracle is None
        assert problem.markspace.size == 2
        assert problem.markspace.total_mass == pytest.approx(1.0)

    def test_needs_source(self):
        with pytest.raises(ConfigurationError):
            build_problem(parse_config(""))

    def test_tables_need_x0(self):
        with pytest.raises(ConfigurationError) as exc_info:
            build_problem(parse_config("[coefficients.b]\nu = 1.0\n"))
        assert "x0" in str(exc_info.value)

    def test_noise(self):
        cfg = parse_config(LQ_CONFIG)
        problem = build_problem(cfg)
        noise = build_noise(cfg, problem)
        assert noise.n_paths == 64
        assert noise.n_steps == 10
        np.testing.assert_array_equal(noise.dW, build_noise(cfg, problem).dW)


class TestCandidate:
    def test_auto_uses_oracle(self):
        cfg = parse_config(LQ_CONFIG)
        problem = build_problem(cfg)
        grid = problem.grid(10)
        control = resolve_candidate(cfg, problem, grid, 4)
        assert control.shape == (4, 10)
        np.testing.assert_allclose(control[0], problem.oracle.control(grid.knots[:-1]))

    def test_auto_without_oracle_control(self):
        cfg = parse_config('[coefficients]\nbuiltin = "zero"\n')
        problem = build_problem(cfg)
        np.testing.assert_array_equal(resolve_candidate(cfg, problem, problem.grid(5), 3), 0.0)

    def test_constant_with_shift(self):
        cfg = parse_config(LQ_CONFIG + 'candidate = "constant"\ncandidate_value = 0.5\ncandidate_shift = 0.25\n')
        problem = build_problem(cfg)
        np.testing.assert_allclose(resolve_candidate(cfg, problem, problem.grid(10), 2), 0.75)

    def test_oracle_required(self):
        cfg = parse_config('[coefficients]\nbuiltin = "coupled_small"\n[run]\ncandidate = "oracle"\n')
        problem = build_problem(cfg)
        with pytest.raises(ConfigurationError) as exc_info:
            resolve_candidate(cfg, problem, problem.grid(5), 2)
        assert "no oracle control" in str(exc_info.value)

    def test_outside_control_set(self, caplog):
        cfg = parse_config(LQ_CONFIG + 'candidate = "constant"\ncandidate_value = 10.0\n')
        problem = build_problem(cfg)
        with caplog.at_level(logging.WARNING):
            resolve_candidate(cfg, problem, problem.grid(10), 2)
        assert "leaves the control set" in caplog.text


class TestSpikeSection:
    def test_oracle_replacement(self):
        problem = build_problem(parse_config('[coefficients]\nbuiltin = "lq_jump"\n'))
        spike = SpikeSection(t_bar=0.5, epsilon=0.1, replacement="oracle").resolve(problem)
        assert spike.replacement == pytest.approx(-1.25)

    def test_numeric_replacement(self):
        problem = build_problem(parse_config('[coefficients]\nbuiltin = "lq_jump"\n'))
        assert SpikeSection(replacement=2.0).resolve(problem).replacement == 2.0

    def test_outside_horizon(self):
        problem = build_problem(parse_config('[coefficients]\nbuiltin = "lq_jump"\n'))
        with pytest.raises(ConfigurationError):
            SpikeSection(t_bar=1.0).resolve(problem)

    def test_run_config_spike(self):
        cfg = RunConfig.model_validate({"spike": {"replacement": "oracle", "t_bar": 0.25}})
        assert cfg.spike.replacement == "oracle"
