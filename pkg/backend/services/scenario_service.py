"""
Scenario service
Turns a validated ScenarioConfig into grids, ensembles, generators and claims, and
provides closed-form Y(0) values where the scenario has one
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy.stats import norm

from models.scenario import (
    AxiomBatteryBlock,
    CallTerminal,
    ConstantKernel,
    ConstantTerminal,
    GridTableCoefficient,
    GridTableKernel,
    KappaAbsZGenerator,
    LinearGenerator,
    LinearTerminal,
    PutTerminal,
    QuadraticGenerator,
    ScenarioConfig,
    SinWCoefficient,
    SumTerminal,
    SwitchTerminal,
    TimeOnlyKernel,
    TimeTableCoefficient,
    ZeroGenerator,
)
from services.bsvie_solver import SolverSettings
from services.coefficients import Coefficient, GeneratorSpec, KernelSpec, TerminalSpec
from services.exceptions import ConfigError
from services.paths import PathEnsemble, TimeGrid, build_time_grid, sample_paths
from services.regression import BasisSpec
from services.risk_measures import BatteryConfig, RiskScenario, battery_from_pairs

logger = logging.getLogger(__name__)


def build_grid(config: ScenarioConfig, steps: Optional[int] = None) -> TimeGrid:
    return build_time_grid(config.horizon, steps if steps is not None else config.steps)


def build_ensemble(
    config: ScenarioConfig,
    workers: Optional[int] = None,
    steps: Optional[int] = None,
    paths: Optional[int] = None,
) -> PathEnsemble:
    grid = build_grid(config, steps)
    return sample_paths(
        grid,
        paths if paths is not None else config.paths,
        config.brownian_dim,
        config.seed,
        workers=workers,
    )


def build_basis(config: ScenarioConfig) -> BasisSpec:
    return BasisSpec(degree=config.solver.degree, ridge=config.solver.ridge)


def build_solver(config: ScenarioConfig) -> SolverSettings:
    block = config.solver
    return SolverSettings(
        beta=block.beta,
        tol=block.tol,
        max_iter=block.max_iter,
        initial=block.initial,
        divergence_window=block.divergence_window,
        h1_samples=block.h1_samples,
    )


def build_coefficient(block, config: ScenarioConfig) -> Coefficient:
    if isinstance(block, (int, float)):
        return Coefficient.constant(block)
    if isinstance(block, TimeTableCoefficient):
        return Coefficient.time_table(block.times, block.values)
    if isinstance(block, GridTableCoefficient):
        # Tables are laid out on the config grid, whatever grid the run uses
        points = build_grid(config).points
        return Coefficient.grid_table(points, np.asarray(block.values))
    if isinstance(block, SinWCoefficient):
        return Coefficient.sin_w(block.scale, block.shift)
    raise ConfigError(f"Unsupported coefficient: {block!r}")


def build_generator(config: ScenarioConfig) -> GeneratorSpec:
    config.require("generator")
    block = config.generator
    if isinstance(block, ZeroGenerator):
        return GeneratorSpec.zero()
    if isinstance(block, LinearGenerator):
        return GeneratorSpec.linear_form(build_coefficient(block.l1, config), block.l2)
    if isinstance(block, KappaAbsZGenerator):
        return GeneratorSpec.kappa_abs_z(block.kappa, build_coefficient(block.r1, config))
    if isinstance(block, QuadraticGenerator):
        return GeneratorSpec.quadratic(block.scale)
    raise ConfigError(f"Unsupported generator: {block!r}")


def build_terminal(block) -> TerminalSpec:
    if isinstance(block, ConstantTerminal):
        return TerminalSpec.constant(block.c)
    if isinstance(block, LinearTerminal):
        return TerminalSpec.linear_terminal(block.a, block.b)
    if isinstance(block, CallTerminal):
        return TerminalSpec.call_on_w(block.K)
    if isinstance(block, PutTerminal):
        return TerminalSpec.put_on_w(block.K)
    if isinstance(block, SwitchTerminal):
        return TerminalSpec.switch(block.at, build_terminal(block.early), build_terminal(block.late))
    if isinstance(block, SumTerminal):
        total = build_terminal(block.terms[0])
        for term in block.terms[1:]:
            total = total.plus(build_terminal(term))
        return total
    raise ConfigError(f"Unsupported terminal: {block!r}")


def build_kernel(config: ScenarioConfig) -> KernelSpec:
    config.require("bvie")
    block = config.bvie.kernel
    if isinstance(block, ConstantKernel):
        return KernelSpec.constant(block.r)
    if isinstance(block, TimeOnlyKernel):
        return Coefficient.time_table(block.times, block.values).kernel()
    if isinstance(block, GridTableKernel):
        return Coefficient.grid_table(build_grid(config).points, np.asarray(block.values)).kernel()
    raise ConfigError(f"Unsupported kernel: {block!r}")


def build_risk_scenario(config: ScenarioConfig, ensemble: PathEnsemble) -> RiskScenario:
    config.require("generator", "terminal")
    return RiskScenario(
        claim=build_terminal(config.terminal),
        generator=build_generator(config),
        ensemble=ensemble,
        basis=build_basis(config),
        solver=build_solver(config),
    )


def build_battery(config: ScenarioConfig, generator: GeneratorSpec) -> BatteryConfig:
    block = config.axioms if config.axioms is not None else AxiomBatteryBlock()

    def pairs(items):
        return [(build_terminal(a), build_terminal(b)) for a, b in items] if items else None

    return battery_from_pairs(
        axioms=block.axioms,
        generator=generator,
        switch_time=block.switch_time,
        homogeneity_factors=block.homogeneity_factors,
        translation_constants=block.translation_constants,
        translation_alt=build_terminal(block.translation_alt) if block.translation_alt else None,
        monotone_pairs=pairs(block.monotone_pairs),
        subadditive_pairs=pairs(block.subadditive_pairs),
    )


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def _linear_parts(claim: dict, dim: int) -> Optional[Tuple[np.ndarray, float]]:
    """(a, b) when the claim is a . W(T) + b, else None"""
    tag = claim["tag"]
    if tag == "constant":
        return np.zeros(dim), claim["c"]
    if tag == "linear":
        return np.broadcast_to(np.asarray(claim["a"], dtype=np.float64), (dim,)), claim["b"]
    if tag in ("negated", "scaled", "shifted"):
        parts = _linear_parts(claim["base"], dim)
        if parts is None:
            return None
        a, b = parts
        if tag == "negated":
            return -a, -b
        if tag == "scaled":
            return claim["factor"] * a, claim["factor"] * b
        return a, b + claim["c"]
    if tag == "sum":
        total_a, total_b = np.zeros(dim), 0.0
        for term in claim["terms"]:
            parts = _linear_parts(term, dim)
            if parts is None:
                return None
            total_a, total_b = total_a + parts[0], total_b + parts[1]
        return total_a, total_b
    return None


def _claim_mean(claim: dict, horizon: float, dim: int) -> Optional[float]:
    """E psi(0, W(T)) for the builtin claims"""
    parts = _linear_parts(claim, dim)
    if parts is not None:
        return float(parts[1])
    tag = claim["tag"]
    sigma = np.sqrt(horizon)
    if tag in ("call", "put"):
        strike = claim["K"]
        density = sigma * norm.pdf(strike / sigma)
        if tag == "call":
            return float(density - strike * norm.sf(strike / sigma))
        return float(density + strike * norm.cdf(strike / sigma))
    if tag in ("negated", "scaled", "shifted"):
        base = _claim_mean(claim["base"], horizon, dim)
        if base is None:
            return None
        if tag == "negated":
            return -base
        if tag == "scaled":
            return claim["factor"] * base
        return base + claim["c"]
    if tag == "sum":
        means = [_claim_mean(term, horizon, dim) for term in claim["terms"]]
        return None if any(m is None for m in means) else float(sum(means))
    return None


def _constant_rate(coefficient: Optional[Coefficient]) -> Optional[float]:
    if coefficient is None or coefficient.kind != "constant":
        return None
    return coefficient.params["value"]


def closed_form_y0(
    generator: GeneratorSpec,
    terminal: TerminalSpec,
    horizon: float,
    brownian_dim: int = 1,
) -> Optional[float]:
    """
    Exact Y(0) for constant-coefficient scenarios, None when there is none.

    With a terminal a . W(T) + b the M-extension is Z(s, t) = a e^{r(T-s)},
    which gives Y(0) = e^{rT} (b + h T) with h = l2 . a, kappa |a| or scale |a|^2.
    """
    claim = terminal.describe()
    if generator.tag == "zero":
        return _claim_mean(claim, horizon, brownian_dim)

    rate = _constant_rate(generator.y_coefficient)
    if rate is None:
        return None
    growth = float(np.exp(rate * horizon))
    parts = _linear_parts(claim, brownian_dim)

    if generator.tag == "linear":
        l2 = np.broadcast_to(np.asarray(generator.params["l2"], dtype=np.float64), (brownian_dim,))
        if not np.any(l2):
            mean = _claim_mean(claim, horizon, brownian_dim)
            return None if mean is None else growth * mean
        if parts is None:
            return None
        a, b = parts
        return growth * (b + float(l2 @ a) * horizon)
    if parts is None:
        return None
    a, b = parts
    if generator.tag == "kappa_abs_z":
        return growth * (b + generator.params["kappa"] * float(np.linalg.norm(a)) * horizon)
    if generator.tag == "quadratic":
        return b + generator.params["l"] * float(a @ a) * horizon
    return None
