"""
Picard solver for discrete adapted M-solutions of

    Y(t) = psi(t) + int_t^T g(t, s, Y(s), Z(s, t)) ds - int_t^T Z(t, s) dW(s)

Each iteration freezes (y, z), solves the frozen equation slice by slice
with least-squares Monte Carlo (freeze_step), then fills Z below the
diagonal from the M-condition Y(t) = E Y(t) + int_0^t Z(t, s) dW(s)
(m_extend). Iterate differences are measured in the beta-weighted norm.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Tuple

import numpy as np

from services.coefficients import GeneratorSpec, TerminalSpec
from services.exceptions import NonFiniteGeneratorError, RegressionError, SolverDivergenceError
from services.paths import PathEnsemble, TimeGrid, path_generator
from services.regression import BasisSpec, regressor_for

logger = logging.getLogger(__name__)

# Relative slack when comparing observed Lipschitz ratios with declared bounds
_RATIO_SLACK = 1e-9

# Substream index reserved for Lipschitz sampling
_H1_STREAM = 2**31 - 1


@dataclass
class AdaptedGrid:
    """Per-slice, per-path scalar values; values[i, m] is the value at t_i on path m"""

    values: np.ndarray

    def mean(self) -> np.ndarray:
        return self.values.mean(axis=1)

    def std(self) -> np.ndarray:
        return self.values.std(axis=1, ddof=1)

    def stderr(self) -> np.ndarray:
        return self.std() / np.sqrt(self.values.shape[1])

    @classmethod
    def zeros(cls, grid: TimeGrid, paths: int) -> "AdaptedGrid":
        return cls(np.zeros((grid.steps + 1, paths)))


@dataclass
class TwoTimeField:
    """
    Two-time integrand Z(t_i, .) over [t_j, t_{j+1}].

    values[i, j, m, k] for i in 0..N, j in 0..N-1: j >= i is the
    equation's region, j < i the M-extension.
    """

    values: np.ndarray

    @classmethod
    def zeros(cls, grid: TimeGrid, paths: int, brownian_dim: int) -> "TwoTimeField":
        return cls(np.zeros((grid.steps + 1, grid.steps, paths, brownian_dim)))


def solve_footprint_bytes(grid: TimeGrid, paths: int, brownian_dim: int) -> int:
    """Bytes one picard_solve keeps alive: the Z field and two Y grids"""
    z_entries = (grid.steps + 1) * grid.steps * paths * brownian_dim
    y_entries = 2 * (grid.steps + 1) * paths
    return 8 * (z_entries + y_entries)


@dataclass
class H1Report:
    """Sampled Lipschitz ratios and integrability estimates for a generator"""

    samples: int
    declared_y: float
    declared_z: Optional[float]
    observed_y: float
    observed_z: float
    g0_functional: float
    l1_integral_declared: float
    l2_integral_declared: Optional[float]
    l1_integral_observed: float
    l2_integral_observed: float
    y_violation: bool
    z_violation: bool
    g0_finite: bool

    @property
    def ok(self) -> bool:
        return not (self.y_violation or self.z_violation) and self.g0_finite

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "declared_y": self.declared_y,
            "declared_z": self.declared_z,
            "observed_y": self.observed_y,
            "observed_z": self.observed_z,
            "g0_functional": self.g0_functional,
            "l1_integral_declared": self.l1_integral_declared,
            "l2_integral_declared": self.l2_integral_declared,
            "l1_integral_observed": self.l1_integral_observed,
            "l2_integral_observed": self.l2_integral_observed,
            "y_violation": self.y_violation,
            "z_violation": self.z_violation,
            "g0_finite": self.g0_finite,
            "ok": self.ok,
        }


@dataclass
class SolverReport:
    iterations: int = 0
    successive_norms: List[float] = field(default_factory=list)
    contraction_ratios: List[float] = field(default_factory=list)
    beta_used: float = 0.0
    converged: bool = False
    lipschitz_diagnostic: Optional[H1Report] = None

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "successive_norms": list(self.successive_norms),
            "contraction_ratios": list(self.contraction_ratios),
            "beta_used": self.beta_used,
            "converged": self.converged,
            "lipschitz_diagnostic": (
                self.lipschitz_diagnostic.to_dict() if self.lipschitz_diagnostic else None
            ),
        }


@dataclass
class MSolutionEstimate:
    y: AdaptedGrid
    z: TwoTimeField
    grid: TimeGrid
    report: SolverReport

    def y0_mean(self) -> float:
        return float(self.y.values[0].mean())

    def y0_stderr(self) -> float:
        return float(self.y.values[0].std(ddof=1) / np.sqrt(self.y.values.shape[1]))


# ---------------------------------------------------------------------------
# One application of the contraction map
# ---------------------------------------------------------------------------

def _check_finite(values: np.ndarray, i: int, j: int) -> None:
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise NonFiniteGeneratorError(i, j, bad, float(values[bad]))


def freeze_step(
    generator: GeneratorSpec,
    terminal: TerminalSpec,
    frozen: Tuple[AdaptedGrid, TwoTimeField],
    ensemble: PathEnsemble,
    basis: BasisSpec,
    out: Optional[TwoTimeField] = None,
    changes: Optional[np.ndarray] = None,
) -> Tuple[AdaptedGrid, TwoTimeField]:
    """
    Solve the frozen equation Y(t) = psi(t) + int g(t, s, y(s), z(s, t)) ds - int Z dW.

    Fills Y on every slice and Z[i, j] for j >= i. The generator at (t_i, t_j)
    reads z[j, i], the frozen field's M-extension entry (diagonal from the
    equation side).

    out may be the frozen field itself: slice i only reads rows j >= i and
    writes row i after reading it. When changes (N x N) is given,
    changes[i, j] receives mean |Z_new - Z_old|^2 before each overwrite.
    """
    frozen_y, frozen_z = frozen
    grid = ensemble.grid
    steps, dt = grid.steps, grid.dt
    regressor = regressor_for(ensemble, basis)
    terminal_state = ensemble.terminal_state()

    y_new = np.empty((steps + 1, ensemble.paths))
    z_new = out if out is not None else TwoTimeField.zeros(grid, ensemble.paths, ensemble.brownian_dim)

    for i in range(steps + 1):
        t_i = grid.time(i)
        accumulator = terminal(t_i, terminal_state)
        if i == steps:
            y_new[i] = accumulator
            continue
        for j in range(i, steps):
            g = generator(t_i, grid.time(j), frozen_y.values[j], frozen_z.values[j, i], ensemble.state_at(j))
            _check_finite(g, i, j)
            accumulator = accumulator + g * dt
        y_new[i] = regressor.conditional(accumulator, i).values
        for j in range(i, steps):
            block = regressor.martingale(accumulator, j)
            if changes is not None:
                changes[i, j] = float(np.mean(np.sum((block - z_new.values[i, j]) ** 2, axis=-1)))
            z_new.values[i, j] = block

    return AdaptedGrid(y_new), z_new


def m_extend(
    y: AdaptedGrid,
    ensemble: PathEnsemble,
    basis: BasisSpec,
    out: Optional[TwoTimeField] = None,
) -> TwoTimeField:
    """Fill Z[i, j], j < i, from Y(t_i) = E Y(t_i) + sum_j Z(t_i, t_j) dW_j"""
    grid = ensemble.grid
    regressor = regressor_for(ensemble, basis)
    z = out if out is not None else TwoTimeField.zeros(grid, ensemble.paths, ensemble.brownian_dim)
    for i in range(1, grid.steps + 1):
        for j in range(i):
            z.values[i, j] = regressor.martingale(y.values[i], j, measurable_at=i)
    return z


# ---------------------------------------------------------------------------
# Norms and diagnostics
# ---------------------------------------------------------------------------

def _beta_sums(y_sq, z_sq, beta: float, grid: TimeGrid) -> float:
    steps, dt = grid.steps, grid.dt
    total = 0.0
    for i in range(steps):
        weight = np.exp(beta * grid.time(i))
        total += weight * y_sq(i) * dt
        for j in range(i, steps):
            total += weight * z_sq(i, j) * dt * dt
    return float(np.sqrt(total))


def beta_norm(y: AdaptedGrid, z: TwoTimeField, beta: float, grid: TimeGrid) -> float:
    """sqrt(mean_paths[sum_i e^{beta t_i} |y_i|^2 dt + sum_i e^{beta t_i} sum_{j>=i} |z_ij|^2 dt^2])"""
    return _beta_sums(
        lambda i: float(np.mean(y.values[i] ** 2)),
        lambda i, j: float(np.mean(np.sum(z.values[i, j] ** 2, axis=-1))),
        beta,
        grid,
    )


def beta_distance(
    first: Tuple[AdaptedGrid, TwoTimeField],
    second: Tuple[AdaptedGrid, TwoTimeField],
    beta: float,
    grid: TimeGrid,
) -> float:
    """beta_norm of first - second without materializing the difference field"""
    (y1, z1), (y2, z2) = first, second
    return _beta_sums(
        lambda i: float(np.mean((y1.values[i] - y2.values[i]) ** 2)),
        lambda i, j: float(np.mean(np.sum((z1.values[i, j] - z2.values[i, j]) ** 2, axis=-1))),
        beta,
        grid,
    )


def m_condition_residual(estimate: MSolutionEstimate, ensemble: PathEnsemble) -> np.ndarray:
    """Per-slice mean |Y_i - mean(Y_i) - sum_{j<i} Z_ij . dW_j|^2"""
    steps = estimate.grid.steps
    residual = np.zeros(steps + 1)
    for i in range(steps + 1):
        y_i = estimate.y.values[i]
        r = y_i - y_i.mean()
        for j in range(i):
            r = r - np.sum(estimate.z.values[i, j] * ensemble.increment_at(j), axis=-1)
        residual[i] = float(np.mean(r ** 2))
    return residual


def check_h1(
    generator: GeneratorSpec,
    ensemble: PathEnsemble,
    sample_count: int,
) -> H1Report:
    """
    Sample finite-difference Lipschitz ratios of the generator and estimate
    E int_0^T (int_t^T |g(t, s, 0, 0)| ds)^2 dt. Never raises on violations.

    The integral forms use q = 2 for the z-bound.
    """
    grid = ensemble.grid
    steps, dt, horizon = grid.steps, grid.dt, grid.horizon
    dim = ensemble.brownian_dim
    rng = path_generator(ensemble.seed, _H1_STREAM)

    observed_y = 0.0
    observed_z = 0.0
    for _ in range(int(sample_count)):
        i = int(rng.integers(0, steps))
        j = int(rng.integers(i, steps))
        m = int(rng.integers(0, ensemble.paths))
        state = ensemble.state_at(j)[m:m + 1]
        y, y_bar = rng.normal(size=(2, 1)) * 2.0
        z, z_bar = rng.normal(size=(2, 1, dim)) * 2.0
        t, s = grid.time(i), grid.time(j)

        dy = float(np.abs(y - y_bar)[0])
        if dy > 0:
            gap = np.abs(generator(t, s, y, z, state) - generator(t, s, y_bar, z, state))[0]
            observed_y = max(observed_y, float(gap) / dy)
        dz = float(np.linalg.norm(z - z_bar))
        if dz > 0:
            gap = np.abs(generator(t, s, y, z, state) - generator(t, s, y, z_bar, state))[0]
            observed_z = max(observed_z, float(gap) / dz)

    zeros_y = np.zeros(ensemble.paths)
    zeros_z = np.zeros((ensemble.paths, dim))
    g0_total = 0.0
    for i in range(steps):
        inner = np.zeros(ensemble.paths)
        for j in range(i, steps):
            g0 = generator(grid.time(i), grid.time(j), zeros_y, zeros_z, ensemble.state_at(j))
            inner = inner + np.abs(g0) * dt
        g0_total += float(np.mean(inner ** 2)) * dt

    declared_y = generator.lipschitz_y
    declared_z = generator.lipschitz_z
    y_violation = observed_y > declared_y * (1 + _RATIO_SLACK) + _RATIO_SLACK
    z_violation = declared_z is None or observed_z > declared_z * (1 + _RATIO_SLACK) + _RATIO_SLACK

    report = H1Report(
        samples=int(sample_count),
        declared_y=declared_y,
        declared_z=declared_z,
        observed_y=observed_y,
        observed_z=observed_z,
        g0_functional=g0_total,
        l1_integral_declared=declared_y ** 2 * horizon,
        l2_integral_declared=None if declared_z is None else declared_z ** 2 * horizon,
        l1_integral_observed=observed_y ** 2 * horizon,
        l2_integral_observed=observed_z ** 2 * horizon,
        y_violation=bool(y_violation),
        z_violation=bool(z_violation),
        g0_finite=bool(np.isfinite(g0_total)),
    )
    if not report.ok:
        logger.warning("Lipschitz diagnostic flagged generator %s: %s", generator.tag, report.to_dict())
    return report


# ---------------------------------------------------------------------------
# Picard loop
# ---------------------------------------------------------------------------

def _initial_iterate(
    initial: Literal["zero", "terminal"],
    terminal: TerminalSpec,
    ensemble: PathEnsemble,
    basis: BasisSpec,
) -> Tuple[AdaptedGrid, TwoTimeField]:
    if initial == "zero":
        return (
            AdaptedGrid.zeros(ensemble.grid, ensemble.paths),
            TwoTimeField.zeros(ensemble.grid, ensemble.paths, ensemble.brownian_dim),
        )
    if initial == "terminal":
        zero = GeneratorSpec.zero()
        empty = _initial_iterate("zero", terminal, ensemble, basis)
        y, z = freeze_step(zero, terminal, empty, ensemble, basis)
        return y, m_extend(y, ensemble, basis, out=z)
    raise ValueError(f"Unknown initial iterate: {initial}")


def picard_solve(
    generator: GeneratorSpec,
    terminal: TerminalSpec,
    ensemble: PathEnsemble,
    basis: BasisSpec,
    beta: Optional[float] = None,
    tol: float = 1e-6,
    max_iter: int = 50,
    initial: Literal["zero", "terminal"] = "zero",
    schedule: Optional[int] = None,
    divergence_window: int = 3,
    h1_samples: int = 0,
) -> MSolutionEstimate:
    """
    Iterate (y, z) -> Theta(y, z) until the beta-distance of successive
    iterates is <= tol.

    Running out of iterations leaves converged unset. schedule=k runs exactly
    k applications with neither the tolerance exit nor divergence abort.
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    if tol <= 0 and schedule is None:
        raise ValueError(f"tol must be > 0, got {tol}")
    grid = ensemble.grid
    beta_used = float(beta) if beta is not None else generator.default_beta()
    if beta_used <= 0:
        raise ValueError(f"beta must be > 0, got {beta_used}")

    psi_moment = float(np.mean(terminal(grid.time(0), ensemble.terminal_state()) ** 2))
    if not np.isfinite(psi_moment):
        raise RegressionError("Terminal condition has a non-finite sample second moment")

    report = SolverReport(beta_used=beta_used)
    if h1_samples > 0:
        report.lipschitz_diagnostic = check_h1(generator, ensemble, h1_samples)

    current = _initial_iterate(initial, terminal, ensemble, basis)
    z_field = current[1]
    changes = np.zeros((grid.steps, grid.steps))
    limit = schedule if schedule is not None else max_iter
    for iteration in range(1, limit + 1):
        # Z is updated in place; only the upper-triangle changes enter the norm
        y_new, z_new = freeze_step(generator, terminal, current, ensemble, basis,
                                   out=z_field, changes=changes)
        m_extend(y_new, ensemble, basis, out=z_new)

        previous_y = current[0]
        distance = _beta_sums(
            lambda i: float(np.mean((y_new.values[i] - previous_y.values[i]) ** 2)),
            lambda i, j: float(changes[i, j]),
            beta_used,
            grid,
        )
        if report.successive_norms:
            previous = report.successive_norms[-1]
            report.contraction_ratios.append(distance / previous if previous > 0 else 0.0)
        report.successive_norms.append(distance)
        report.iterations = iteration
        current = (y_new, z_new)
        logger.debug("Picard iteration %d: beta-distance %.3e", iteration, distance)

        if schedule is not None:
            continue
        if distance <= tol or not generator.depends_on_state:
            # A generator that ignores (y, z) makes Theta constant: one application is exact
            report.converged = True
            break

        window = report.contraction_ratios[-divergence_window:]
        if len(window) == divergence_window and all(r > 1.0 for r in window):
            raise SolverDivergenceError(
                f"Picard iterates diverging (ratios {', '.join(f'{r:.3g}' for r in window)}); "
                f"try a larger beta than {beta_used:g} or a smaller horizon",
                report=report,
            )

    if schedule is None and not report.converged:
        logger.warning(
            "Picard iteration stopped at max_iter=%d with distance %.3e > tol=%.1e",
            max_iter, report.successive_norms[-1], tol,
        )
    return MSolutionEstimate(y=current[0], z=current[1], grid=grid, report=report)


@dataclass(frozen=True)
class SolverSettings:
    """Picard parameters shared by every solve of a scenario"""

    beta: Optional[float] = None
    tol: float = 1e-6
    max_iter: int = 50
    initial: Literal["zero", "terminal"] = "zero"
    divergence_window: int = 3
    h1_samples: int = 0

    def run(
        self,
        generator: GeneratorSpec,
        terminal: TerminalSpec,
        ensemble: PathEnsemble,
        basis: BasisSpec,
        schedule: Optional[int] = None,
    ) -> MSolutionEstimate:
        return picard_solve(
            generator,
            terminal,
            ensemble,
            basis,
            beta=self.beta,
            tol=self.tol,
            max_iter=self.max_iter,
            initial=self.initial,
            schedule=schedule,
            divergence_window=self.divergence_window,
            h1_samples=self.h1_samples,
        )
