"""
Tests for the least-squares conditional expectation and martingale estimators
"""

import numpy as np
import pytest

from services.exceptions import RegressionError
from services.paths import build_time_grid, sample_paths
from services.regression import (
    BasisSpec,
    SliceRegressor,
    martingale_coefficient,
    measure_regression_rmse,
    regress_conditional,
    regressor_for,
)


class TestBasisSpec:

    def test_sizes(self):
        assert BasisSpec(degree=2).size(1) == 3
        assert BasisSpec(degree=2).size(2) == 6
        assert BasisSpec(degree=1).size(3) == 4

    @pytest.mark.parametrize("kwargs", [{"degree": -1}, {"ridge": -1e-3}, {"kind": "hermite"}])
    def test_invalid_basis(self, kwargs):
        with pytest.raises(RegressionError):
            BasisSpec(**kwargs)

    def test_too_few_paths(self):
        ensemble = sample_paths(build_time_grid(1.0, 4), 25, 1, seed=1)
        with pytest.raises(RegressionError):
            SliceRegressor(ensemble, BasisSpec(degree=2))


class TestConditional:

    def test_linear_target(self, desk_ensemble):
        basis = BasisSpec(degree=1)
        estimate = regress_conditional(desk_ensemble.terminal_state()[:, 0], desk_ensemble, 16, basis)
        intercept, slope = estimate.coefficients
        assert abs(intercept) <= 0.05
        assert abs(slope - 1.0) <= 0.05

    def test_square_target(self, desk_ensemble, basis):
        terminal = desk_ensemble.terminal_state()[:, 0]
        estimate = regress_conditional(terminal ** 2, desk_ensemble, 16, basis)
        constant, linear, square = estimate.coefficients
        assert abs(constant - 0.5) <= 0.05
        assert abs(linear) <= 0.05
        assert abs(square - 1.0) <= 0.05

    def test_constant_target_reproduced_exactly(self, desk_ensemble, basis):
        estimate = regress_conditional(np.full(desk_ensemble.paths, 7.0), desk_ensemble, 10, basis)
        assert np.all(estimate.values == 7.0)
        assert np.all(estimate.coefficients[1:] == 0.0)

    def test_first_slice_is_sample_mean(self, desk_ensemble, basis):
        terminal = desk_ensemble.terminal_state()[:, 0]
        estimate = regress_conditional(terminal, desk_ensemble, 0, basis)
        assert np.allclose(estimate.values, terminal.mean(), atol=1e-14)

    def test_idempotent_without_ridge(self, desk_ensemble):
        basis = BasisSpec(degree=2, ridge=0.0)
        terminal = desk_ensemble.terminal_state()[:, 0]
        once = regress_conditional(terminal, desk_ensemble, 8, basis).values
        twice = regress_conditional(once, desk_ensemble, 8, basis).values
        assert np.max(np.abs(once - twice)) <= 1e-10

    def test_tower_property(self, desk_ensemble, basis):
        """E[E[W(T)^2 | F_j] | F_i] = E[W(T)^2 | F_i] = W(t_i)^2 + T - t_i for i < j"""
        i, j = 8, 24
        target = desk_ensemble.terminal_state()[:, 0] ** 2
        inner = regress_conditional(target, desk_ensemble, j, basis).values
        nested = regress_conditional(inner, desk_ensemble, i, basis).values
        direct = regress_conditional(target, desk_ensemble, i, basis).values
        exact = desk_ensemble.state_at(i)[:, 0] ** 2 + 1.0 - desk_ensemble.grid.time(i)
        assert np.sqrt(np.mean((nested - direct) ** 2)) <= 0.05
        assert np.sqrt(np.mean((nested - exact) ** 2)) <= 0.08
        assert np.sqrt(np.mean((direct - exact) ** 2)) <= 0.08

    def test_factor_is_only_per_path_cache(self, small_ensemble):
        regressor = SliceRegressor(small_ensemble, BasisSpec(degree=2))
        target = small_ensemble.terminal_state()[:, 0]
        for i in range(small_ensemble.grid.steps + 1):
            regressor.conditional(target, i)
        slices = small_ensemble.grid.steps + 1
        assert regressor.cached_bytes == slices * (3 * small_ensemble.paths + 9) * 8

    def test_fit_matches_fitted_values(self, small_ensemble, basis):
        regressor = regressor_for(small_ensemble, basis)
        state = small_ensemble.state_at(6)[:, 0]
        target = np.cos(small_ensemble.terminal_state()[:, 0])
        coefficients = regressor.fit(target, 6)
        rebuilt = coefficients[0] + coefficients[1] * state + coefficients[2] * state ** 2
        values = regressor.conditional(target, 6).values
        assert np.max(np.abs(rebuilt - values)) <= 1e-10

    def test_measurable_target_returned(self, desk_ensemble, basis):
        state = desk_ensemble.state_at(12)[:, 0]
        values = regress_conditional(state, desk_ensemble, 12, basis).values
        assert np.max(np.abs(values - state)) <= 1e-6

    def test_future_increments_do_not_matter(self, small_ensemble, basis):
        """Permuting increments after t_i across paths leaves E[f(W(t_i)) | F_i] unchanged"""
        i = 8
        rng = np.random.default_rng(0)
        increments = np.array(small_ensemble.increments)
        increments[:, i:, :] = increments[rng.permutation(small_ensemble.paths), i:, :]
        permuted = small_ensemble.with_increments(increments)
        assert np.array_equal(permuted.state_at(i), small_ensemble.state_at(i))

        target = np.sin(small_ensemble.state_at(i)[:, 0])
        before = regress_conditional(target, small_ensemble, i, basis).values
        after = regress_conditional(target, permuted, i, basis).values
        assert np.array_equal(before, after)

    def test_rejects_nan_targets(self, small_ensemble, basis):
        targets = np.zeros(small_ensemble.paths)
        targets[3] = np.nan
        with pytest.raises(RegressionError):
            regress_conditional(targets, small_ensemble, 2, basis)

    def test_rejects_wrong_shape(self, small_ensemble, basis):
        with pytest.raises(RegressionError):
            regress_conditional(np.zeros(10), small_ensemble, 2, basis)

    def test_singular_design_without_ridge(self):
        grid = build_time_grid(1.0, 4)
        ensemble = sample_paths(grid, 200, 1, seed=2)
        # Every path at the same state: the design has rank one
        flat = ensemble.with_increments(np.zeros_like(ensemble.increments))
        with pytest.raises(RegressionError, match="ridge"):
            regress_conditional(np.arange(200.0), flat, 2, BasisSpec(degree=2, ridge=0.0))

    def test_regressor_shared_per_ensemble(self, small_ensemble, basis):
        assert regressor_for(small_ensemble, basis) is regressor_for(small_ensemble, basis)


class TestMartingale:

    def test_terminal_state_coefficient_is_one(self, desk_ensemble, basis):
        terminal = desk_ensemble.terminal_state()[:, 0]
        squared, means = [], []
        for j in range(desk_ensemble.grid.steps):
            z = martingale_coefficient(terminal, desk_ensemble, j, basis)[:, 0]
            squared.append(np.mean((z - 1.0) ** 2))
            means.append(z.mean())
        assert np.sqrt(np.mean(squared)) <= 0.1
        assert np.max(np.abs(np.asarray(means) - 1.0)) <= 0.2
        assert abs(np.mean(means) - 1.0) <= 0.05

    def test_square_target(self, desk_ensemble, basis):
        """Y = W(t_i)^2 has Z(t_i, t_j) = 2 W(t_j)"""
        i = 24
        target = desk_ensemble.state_at(i)[:, 0] ** 2
        for j in (4, 12, 20):
            z = martingale_coefficient(target, desk_ensemble, j, basis, measurable_at=i)[:, 0]
            expected = 2.0 * desk_ensemble.state_at(j)[:, 0]
            assert np.sqrt(np.mean((z - expected) ** 2)) <= 0.15

    def test_measurable_at_reduces_noise(self, desk_ensemble, basis):
        i = desk_ensemble.grid.steps
        target = desk_ensemble.state_at(i)[:, 0]
        plain, reduced = [], []
        for j in range(i):
            plain.append(np.mean((martingale_coefficient(target, desk_ensemble, j, basis)[:, 0] - 1.0) ** 2))
            fitted = martingale_coefficient(target, desk_ensemble, j, basis, measurable_at=i)[:, 0]
            reduced.append(np.mean((fitted - 1.0) ** 2))
        assert np.mean(reduced) < 0.5 * np.mean(plain)
        assert np.sqrt(np.mean(reduced)) <= 0.06

    def test_constant_target_has_zero_coefficient(self, small_ensemble, basis):
        z = martingale_coefficient(np.full(small_ensemble.paths, -2.5), small_ensemble, 4, basis)
        assert np.all(z == 0.0)

    def test_two_dimensional_components(self, basis):
        ensemble = sample_paths(build_time_grid(1.0, 8), 20000, 2, seed=9)
        terminal = ensemble.terminal_state()
        target = terminal[:, 0] - 2.0 * terminal[:, 1]
        z = martingale_coefficient(target, ensemble, 0, basis)
        assert z.shape == (20000, 2)
        assert abs(z[:, 0].mean() - 1.0) <= 0.2
        assert abs(z[:, 1].mean() + 2.0) <= 0.3

    def test_slice_out_of_range(self, small_ensemble, basis):
        with pytest.raises(RegressionError):
            martingale_coefficient(np.ones(small_ensemble.paths), small_ensemble, small_ensemble.grid.steps, basis)


class TestRegressionRmse:

    def test_rmse_is_small_and_cached(self, desk_ensemble, basis):
        rmse = measure_regression_rmse(desk_ensemble, basis)
        assert 0.0 < rmse <= 0.05
        assert measure_regression_rmse(desk_ensemble, basis) == rmse

    def test_rmse_shrinks_with_paths(self, basis):
        grid = build_time_grid(1.0, 8)
        coarse = measure_regression_rmse(sample_paths(grid, 2000, 1, seed=4), basis)
        fine = measure_regression_rmse(sample_paths(grid, 32000, 1, seed=4), basis)
        assert fine < coarse
