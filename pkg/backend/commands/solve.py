"""
Solver commands: solve, risk, convergence
"""

import logging

import click

from commands.common import CommandContext, CommandOutcome, common_options, run_command
from services.bsvie_solver import m_condition_residual
from services.regression import measure_regression_rmse
from services.report_service import (
    build_report,
    convergence_frame,
    rho_curve_frame,
    solve_slices_frame,
    write_csv,
    write_json,
)
from services.risk_measures import solve_risk
from services.scenario_service import (
    build_basis,
    build_ensemble,
    build_generator,
    build_grid,
    build_kernel,
    build_risk_scenario,
    build_solver,
    build_terminal,
    closed_form_y0,
)
from services.volterra import bvie_oracle, solve_bvie

logger = logging.getLogger(__name__)


def _echo_convergence(report) -> None:
    if report.converged:
        click.echo(f"✅ Converged after {report.iterations} iterations "
                   f"(last beta-distance {report.successive_norms[-1]:.3e})")
    else:
        click.echo(f"⚠️ Not converged after {report.iterations} iterations "
                   f"(last beta-distance {report.successive_norms[-1]:.3e})")


def _solve(ctx: CommandContext) -> CommandOutcome:
    config = ctx.config
    config.require("generator", "terminal")
    generator = build_generator(config)
    terminal = build_terminal(config.terminal)
    basis = build_basis(config)

    click.echo(f"🧮 Solving {generator.tag} generator, claim {terminal.tag}: "
               f"M={config.paths} N={config.steps} d={config.brownian_dim} seed={config.seed}")
    ensemble = build_ensemble(config, workers=ctx.workers)
    estimate = build_solver(config).run(generator, terminal, ensemble, basis)
    _echo_convergence(estimate.report)

    residual = m_condition_residual(estimate, ensemble)
    rmse = measure_regression_rmse(ensemble, basis)
    oracle = closed_form_y0(generator, terminal, config.horizon, config.brownian_dim)
    payload = {
        "generator": generator.describe(),
        "terminal": terminal.describe(),
        "y0_mean": estimate.y0_mean(),
        "y0_stderr": estimate.y0_stderr(),
        "closed_form_y0": oracle,
        "regression_rmse": rmse,
        "m_residual": residual.tolist(),
        "m_residual_max": float(residual.max()),
        "m_residual_bound": 5.0 * rmse ** 2,
        "solver": estimate.report.to_dict(),
    }
    write_json(build_report("solve", config, payload), ctx.output_dir / "solve_report.json")
    write_csv(solve_slices_frame(estimate, residual), ctx.output_dir / "solve_slices.csv")

    click.echo(f"📈 Y(0) = {estimate.y0_mean():.6f} ± {estimate.y0_stderr():.2e}"
               + (f" (closed form {oracle:.6f})" if oracle is not None else ""))
    click.echo(f"💾 Reports saved to {ctx.output_dir}")
    return CommandOutcome(headline=estimate.y0_mean())


def _risk(ctx: CommandContext) -> CommandOutcome:
    config = ctx.config
    config.require("generator", "terminal")
    ensemble = build_ensemble(config, workers=ctx.workers)
    scenario = build_risk_scenario(config, ensemble)

    click.echo(f"🧮 Evaluating rho for claim {scenario.claim.tag} under {scenario.generator.tag}")
    estimate = solve_risk(scenario)
    _echo_convergence(estimate.report)

    oracle = closed_form_y0(scenario.generator, scenario.claim.negated(), config.horizon, config.brownian_dim)
    payload = {
        "generator": scenario.generator.describe(),
        "claim": scenario.claim.describe(),
        "rho0_mean": estimate.y0_mean(),
        "rho0_stderr": estimate.y0_stderr(),
        "closed_form_rho0": oracle,
        "regression_rmse": scenario.regression_rmse(),
        "solver": estimate.report.to_dict(),
    }
    write_json(build_report("risk", config, payload), ctx.output_dir / "risk_report.json")
    write_csv(rho_curve_frame(estimate.y, ensemble.grid), ctx.output_dir / "rho_curve.csv")

    click.echo(f"📉 rho(0) = {estimate.y0_mean():.6f} ± {estimate.y0_stderr():.2e}")
    click.echo(f"💾 Reports saved to {ctx.output_dir}")
    return CommandOutcome(headline=estimate.y0_mean())


def _ladder_row(ladder: str, steps: int, paths: int, value: float, stderr: float, oracle) -> dict:
    return {
        "ladder": ladder,
        "steps": steps,
        "paths": paths,
        "value": value,
        "stderr": stderr,
        "oracle": oracle,
        "error": abs(value - oracle) if oracle is not None else None,
    }


def _convergence(ctx: CommandContext) -> CommandOutcome:
    config = ctx.config
    config.require("convergence")
    block = config.convergence
    rows = []

    if block.kind == "bvie":
        config.require("bvie")
        kernel = build_kernel(config)
        oracle = bvie_oracle(kernel, config.bvie.c, 0.0, config.horizon)
        for steps in block.steps_ladder:
            y_star = solve_bvie(kernel, config.bvie.c, build_grid(config, steps),
                                tol=config.bvie.tol, max_iter=config.bvie.max_iter)
            rows.append(_ladder_row("steps", steps, 0, float(y_star[0]), 0.0, oracle))
            click.echo(f"🔁 N={steps}: Y*(0) = {y_star[0]:.10f}")
    else:
        config.require("generator", "terminal")
        generator = build_generator(config)
        terminal = build_terminal(config.terminal)
        if block.kind == "risk":
            terminal = terminal.negated()
        basis = build_basis(config)
        solver = build_solver(config)
        oracle = closed_form_y0(generator, terminal, config.horizon, config.brownian_dim)
        ladders = [("steps", steps, config.paths) for steps in block.steps_ladder]
        ladders += [("paths", config.steps, paths) for paths in (block.paths_ladder or [])]
        for ladder, steps, paths in ladders:
            ensemble = build_ensemble(config, workers=ctx.workers, steps=steps, paths=paths)
            estimate = solver.run(generator, terminal, ensemble, basis)
            rows.append(_ladder_row(ladder, steps, paths, estimate.y0_mean(), estimate.y0_stderr(), oracle))
            click.echo(f"🔁 {ladder} ladder N={steps} M={paths}: Y(0) = {estimate.y0_mean():.8f}")
            del estimate, ensemble

    frame = convergence_frame(rows)
    payload = {"kind": block.kind, "oracle": oracle, "rows": frame.to_dict(orient="records")}
    write_json(build_report("convergence", config, payload), ctx.output_dir / "convergence_report.json")
    write_csv(frame, ctx.output_dir / "convergence.csv")
    click.echo(f"💾 Reports saved to {ctx.output_dir}")
    return CommandOutcome(headline=rows[-1]["error"])


@click.command("solve")
@common_options
def solve_command(**options):
    """Solve the scenario's BSVIE (solve_report.json, solve_slices.csv)."""
    run_command("solve", _solve, **options)


@click.command("risk")
@common_options
def risk_command(**options):
    """Evaluate rho(t; psi) for the scenario's claim (risk_report.json, rho_curve.csv)."""
    run_command("risk", _risk, **options)


@click.command("convergence")
@common_options
def convergence_command(**options):
    """Refinement study over the configured ladders (convergence_report.json, convergence.csv)."""
    run_command("convergence", _convergence, **options)
