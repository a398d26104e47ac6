"""
Tests for the deterministic backward Volterra solver and its closed forms
"""

import numpy as np
import pytest

from services.coefficients import Coefficient, KernelSpec
from services.exceptions import BVIEConvergenceError, GridValidationError
from services.paths import build_time_grid
from services.volterra import bvie_oracle, closed_form_translation, kernel_matrix, solve_bvie


class TestSolveBVIE:

    def test_unit_kernel(self):
        y_star = solve_bvie(KernelSpec.constant(1.0), 1.0, build_time_grid(1.0, 64))
        assert y_star[0] == pytest.approx(-np.e, abs=1e-3)
        assert y_star[-1] == -1.0

    def test_time_only_kernel(self):
        kernel = KernelSpec.time_only(lambda u: u)
        y_star = solve_bvie(kernel, 1.0, build_time_grid(1.0, 64))
        assert y_star[0] == pytest.approx(-np.exp(0.5), abs=1e-3)

    def test_whole_curve_matches_closed_form(self):
        grid = build_time_grid(1.0, 64)
        y_star = solve_bvie(KernelSpec.constant(0.1), 1.0, grid)
        exact = -np.exp(0.1 * (1.0 - grid.points))
        assert np.max(np.abs(y_star - exact)) <= 1e-5

    def test_second_order_convergence(self):
        kernel = KernelSpec.time_only(lambda u: u)
        errors = []
        for steps in (32, 64):
            grid = build_time_grid(1.0, steps)
            y_star = solve_bvie(kernel, 1.0, grid)
            exact = -np.exp((1.0 - grid.points ** 2) / 2)
            errors.append(np.max(np.abs(y_star - exact)))
        assert 3.0 <= errors[0] / errors[1] <= 5.0

    def test_linear_in_c(self):
        grid = build_time_grid(1.0, 16)
        kernel = KernelSpec.constant(0.3)
        one = solve_bvie(kernel, 1.0, grid)
        three = solve_bvie(kernel, 3.0, grid)
        assert np.allclose(three, 3.0 * one, rtol=1e-10)

    def test_zero_constant(self):
        y_star = solve_bvie(KernelSpec.constant(0.5), 0.0, build_time_grid(1.0, 8))
        assert np.all(y_star == 0.0)

    def test_zero_kernel(self):
        y_star = solve_bvie(KernelSpec.constant(0.0), 2.0, build_time_grid(1.0, 8))
        assert np.all(y_star == -2.0)

    def test_grid_table_kernel(self):
        grid = build_time_grid(1.0, 16)
        table = np.full((17, 17), 0.1)
        kernel = Coefficient.grid_table(grid.points, table).kernel()
        from_table = solve_bvie(kernel, 1.0, grid)
        from_constant = solve_bvie(KernelSpec.constant(0.1), 1.0, grid)
        assert np.allclose(from_table, from_constant, atol=1e-12)

    def test_too_large_kernel_does_not_settle(self):
        with pytest.raises(BVIEConvergenceError):
            solve_bvie(KernelSpec.constant(50.0), 1.0, build_time_grid(1.0, 4), max_iter=30)

    def test_non_finite_kernel_rejected(self):
        kernel = KernelSpec.general(lambda t, s: np.inf if s > 0.5 else 0.0)
        with pytest.raises(GridValidationError):
            kernel_matrix(kernel, build_time_grid(1.0, 4))

    def test_kernel_matrix_upper_triangle(self):
        grid = build_time_grid(1.0, 4)
        matrix = kernel_matrix(KernelSpec.general(lambda t, s: t + s), grid)
        assert matrix[1, 3] == pytest.approx(0.25 + 0.75)
        assert matrix[3, 1] == 0.0


class TestClosedForms:

    def test_constant_rate(self):
        assert closed_form_translation(lambda u: 0.05, 1.0, 0.0, 1.0) == pytest.approx(-np.exp(0.05), abs=1e-12)

    def test_linear_rate(self):
        assert closed_form_translation(lambda u: u, 2.0, 0.0, 1.0) == pytest.approx(-2.0 * np.exp(0.5), abs=1e-6)

    def test_at_horizon(self):
        assert closed_form_translation(lambda u: 0.3, 1.5, 1.0, 1.0) == -1.5

    def test_on_grid_nodes(self):
        grid = build_time_grid(1.0, 8)
        value = closed_form_translation(lambda u: 0.2, 1.0, grid.time(2), 1.0, grid=grid)
        assert value == pytest.approx(-np.exp(0.2 * 0.75), rel=1e-12)

    def test_oracles(self):
        assert bvie_oracle(KernelSpec.constant(1.0), 1.0, 0.0, 1.0) == pytest.approx(-np.e)
        time_only = Coefficient.time_table([0.0, 1.0], [0.0, 1.0]).kernel()
        assert bvie_oracle(time_only, 1.0, 0.0, 1.0) == pytest.approx(-np.exp(0.5), rel=1e-8)
        assert bvie_oracle(KernelSpec.general(lambda t, s: t * s), 1.0, 0.0, 1.0) is None
