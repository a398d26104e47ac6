"""
Tests for scenario validation, the block builders and the closed-form Y(0) values
"""

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.stats import norm

from models.scenario import ScenarioConfig
from services.coefficients import Coefficient, GeneratorSpec, TerminalSpec
from services.exceptions import ConfigError
from services.scenario_service import (
    build_battery,
    build_ensemble,
    build_generator,
    build_kernel,
    build_solver,
    build_terminal,
    closed_form_y0,
)

BASE = {
    "horizon": 1.0,
    "steps": 8,
    "paths": 1000,
    "seed": 3,
    "generator": {"tag": "linear", "l1": 0.1, "l2": 0.2},
    "terminal": {"tag": "linear", "a": 1.0, "b": 0.0},
}


def make_config(**overrides) -> ScenarioConfig:
    return ScenarioConfig.model_validate({**BASE, **overrides})


class TestScenarioValidation:

    def test_defaults(self):
        config = ScenarioConfig.model_validate({})
        assert config.steps == 32
        assert config.paths == 20000
        assert config.solver.degree == 2
        assert config.generator is None

    def test_unknown_field_rejected(self):
        with pytest.raises(ValidationError):
            make_config(step=8)

    def test_unknown_generator_tag(self):
        with pytest.raises(ValidationError):
            make_config(generator={"tag": "exponential"})

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            make_config(horizon=float("inf"))

    def test_grid_table_size_checked(self):
        table = np.full((8, 8), 0.1).tolist()
        with pytest.raises(ValidationError, match="9 x 9"):
            make_config(generator={"tag": "linear", "l1": {"kind": "grid_table", "values": table}})

    def test_grid_table_accepted(self):
        table = np.full((9, 9), 0.1).tolist()
        config = make_config(generator={"tag": "linear", "l1": {"kind": "grid_table", "values": table}})
        assert build_generator(config).y_kernel() is not None

    def test_basis_too_large_for_paths(self):
        with pytest.raises(ValidationError, match="too small"):
            make_config(paths=30)
        assert make_config(paths=31).paths == 31

    def test_switch_time_inside_horizon(self):
        with pytest.raises(ValidationError):
            make_config(axioms={"switch_time": 1.0})

    def test_kappa_needs_deterministic_r1(self):
        with pytest.raises(ValidationError):
            make_config(generator={"tag": "kappa_abs_z", "kappa": 0.5, "r1": {"kind": "sin_w"}})

    def test_time_table_must_increase(self):
        with pytest.raises(ValidationError):
            make_config(generator={"tag": "linear", "l1": {"kind": "time_table", "times": [0.0, 0.0],
                                                           "values": [1.0, 2.0]}})

    def test_l2_length_checked(self):
        with pytest.raises(ValidationError, match="generator.l2 has 2 entries"):
            make_config(generator={"tag": "linear", "l2": [0.1, 0.2]})
        assert make_config(generator={"tag": "linear", "l2": [0.1]}).brownian_dim == 1
        two = make_config(brownian_dim=2, generator={"tag": "linear", "l2": [0.1, 0.2]},
                          terminal={"tag": "linear", "a": [1.0, -1.0]})
        assert build_generator(two).lipschitz_z == pytest.approx(np.hypot(0.1, 0.2))

    def test_nested_terminal_vectors_checked(self):
        with pytest.raises(ValidationError, match=r"terminal\.late\.terms\.1\.a"):
            make_config(terminal={
                "tag": "switch", "at": 0.5, "early": {"tag": "constant", "c": 0.0},
                "late": {"tag": "sum", "terms": [{"tag": "call", "K": 0.0}, {"tag": "linear", "a": [1.0, 1.0]}]},
            })
        with pytest.raises(ValidationError, match=r"axioms\.monotone_pairs\.0\.1\.a"):
            make_config(axioms={"monotone_pairs": [[{"tag": "linear"}, {"tag": "linear", "a": [1.0, 2.0]}]]})
        with pytest.raises(ValidationError, match="axioms.translation_alt.a"):
            make_config(axioms={"translation_alt": {"tag": "linear", "a": [0.0, 1.0]}})

    def test_require(self):
        config = make_config()
        config.require("generator", "terminal")
        with pytest.raises(ConfigError, match="bvie"):
            config.require("bvie")

    def test_convergence_ladder_length(self):
        with pytest.raises(ValidationError):
            make_config(convergence={"steps_ladder": [8]})


class TestBuilders:

    def test_generator(self):
        generator = build_generator(make_config())
        assert generator.tag == "linear"
        assert generator.lipschitz_y == pytest.approx(0.1)
        assert generator.lipschitz_z == pytest.approx(0.2)
        assert generator.default_beta() == 8.0

    def test_sin_w_coefficient(self):
        config = make_config(generator={"tag": "linear", "l1": {"kind": "sin_w", "scale": 0.1, "shift": 1.0}})
        generator = build_generator(config)
        assert generator.y_kernel() is None
        assert generator.lipschitz_y == pytest.approx(0.2)

    def test_missing_generator(self):
        config = ScenarioConfig.model_validate({"steps": 8, "paths": 1000})
        with pytest.raises(ConfigError):
            build_generator(config)

    def test_sum_and_switch_terminals(self):
        config = make_config(terminal={
            "tag": "switch", "at": 0.5,
            "early": {"tag": "sum", "terms": [{"tag": "linear"}, {"tag": "constant", "c": 2.0}]},
            "late": {"tag": "call", "K": 0.0},
        })
        claim = build_terminal(config.terminal)
        w = np.array([[-1.0], [0.5]])
        assert claim(0.0, w).tolist() == [1.0, 2.5]
        assert claim(0.5, w).tolist() == [0.0, 0.5]

    def test_kernel(self):
        config = make_config(bvie={"kernel": {"tag": "time_only", "times": [0.0, 1.0], "values": [0.0, 1.0]},
                                   "c": 1.0})
        kernel = build_kernel(config)
        assert kernel.tag == "time_only"
        assert kernel(0.2, 0.75) == pytest.approx(0.75)

    def test_solver(self):
        config = make_config(solver={"tol": 1e-9, "max_iter": 7, "initial": "terminal", "beta": 4.0})
        solver = build_solver(config)
        assert (solver.tol, solver.max_iter, solver.initial, solver.beta) == (1e-9, 7, "terminal", 4.0)

    def test_ensemble_override(self):
        ensemble = build_ensemble(make_config(), steps=4, paths=500)
        assert ensemble.increments.shape == (500, 4, 1)
        assert ensemble.seed == 3

    def test_battery_overrides(self):
        config = make_config(axioms={
            "axioms": ["monotonicity"],
            "monotone_pairs": [[{"tag": "constant", "c": 0.0}, {"tag": "constant", "c": 1.0}]],
        })
        battery = build_battery(config, build_generator(config))
        assert battery.axioms == ("monotonicity",)
        assert len(battery.monotone_pairs) == 1


class TestClosedForm:

    W = TerminalSpec.linear_terminal(1.0)

    def test_zero_generator_call(self):
        value = closed_form_y0(GeneratorSpec.zero(), TerminalSpec.call_on_w(0.5), 1.0)
        assert value == pytest.approx(norm.pdf(0.5) - 0.5 * norm.sf(0.5), rel=1e-12)

    def test_call_put_parity(self):
        call = closed_form_y0(GeneratorSpec.zero(), TerminalSpec.call_on_w(0.3), 2.0)
        put = closed_form_y0(GeneratorSpec.zero(), TerminalSpec.put_on_w(0.3), 2.0)
        assert call - put == pytest.approx(-0.3, abs=1e-12)

    def test_zero_generator_linear_claim(self):
        claim = self.W.scaled(2.0).shifted(1.5).negated()
        assert closed_form_y0(GeneratorSpec.zero(), claim, 1.0) == pytest.approx(-1.5)

    def test_linear_generator(self):
        value = closed_form_y0(GeneratorSpec.linear_form(0.1, 0.2), self.W, 1.0)
        assert value == pytest.approx(np.exp(0.1) * 0.2)

    def test_linear_generator_without_z_term(self):
        value = closed_form_y0(GeneratorSpec.linear_form(0.1), TerminalSpec.call_on_w(0.0), 1.0)
        assert value == pytest.approx(np.exp(0.1) * norm.pdf(0.0))

    def test_kappa_generator(self):
        value = closed_form_y0(GeneratorSpec.kappa_abs_z(0.5), self.W.shifted(1.0), 1.0)
        assert value == pytest.approx(1.5)

    def test_kappa_two_dimensional(self):
        value = closed_form_y0(GeneratorSpec.kappa_abs_z(1.0), TerminalSpec.linear_terminal([3.0, 4.0]), 1.0, 2)
        assert value == pytest.approx(5.0)

    def test_quadratic_generator(self):
        assert closed_form_y0(GeneratorSpec.quadratic(2.0), self.W, 1.0) == pytest.approx(2.0)

    def test_no_closed_form(self):
        random_rate = GeneratorSpec.linear_form(Coefficient.sin_w())
        assert closed_form_y0(random_rate, self.W, 1.0) is None
        assert closed_form_y0(GeneratorSpec.linear_form(0.1, 0.2), TerminalSpec.call_on_w(0.0), 1.0) is None
        switching = TerminalSpec.switch(0.5, self.W, TerminalSpec.constant(1.0))
        assert closed_form_y0(GeneratorSpec.zero(), switching, 1.0) is None
