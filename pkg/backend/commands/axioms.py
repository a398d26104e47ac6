"""
Risk-measure experiment commands: axioms, counterexample
"""

import click

from commands.common import EXIT_OK, EXIT_STRICT, CommandContext, CommandOutcome, common_options, run_command
from config.settings import settings
from services.report_service import (
    axioms_frame,
    build_report,
    counterexample_frame,
    format_axiom_table,
    write_csv,
    write_json,
)
from services.risk_measures import TOLERANCE_FACTOR, coherence_report, sin_counterexample
from services.scenario_service import (
    build_basis,
    build_battery,
    build_ensemble,
    build_risk_scenario,
    build_solver,
)
from utils.helpers import save_artifact


def _axioms(ctx: CommandContext) -> CommandOutcome:
    config = ctx.config
    config.require("generator", "terminal")
    ensemble = build_ensemble(config, workers=ctx.workers)
    scenario = build_risk_scenario(config, ensemble)
    battery = build_battery(config, scenario.generator)

    click.echo(f"🧪 Running axiom battery ({', '.join(battery.axioms)}) on {scenario.generator.tag}")
    report = coherence_report(scenario, battery, workers=ctx.workers,
                              memory_budget_mb=settings.memory_budget_mb)
    table = format_axiom_table(report)
    click.echo(table)

    payload = {
        "generator": scenario.generator.describe(),
        "claim": scenario.claim.describe(),
        "regression_rmse": scenario.regression_rmse(),
        "tolerance_factor": TOLERANCE_FACTOR,
        "summary": axioms_frame(report).to_dict(orient="records"),
        **report.to_dict(),
    }
    write_json(build_report("axioms", config, payload), ctx.output_dir / "axioms_report.json")
    save_artifact(table + "\n", "axioms_table.txt", ctx.output_dir)

    failed = [result.name for result in report.ordered() if not result.holds]
    if failed:
        click.echo(f"⚠️ Axioms not confirmed: {', '.join(failed)}")
    else:
        click.echo("✅ All axioms hold within tolerance")
    click.echo(f"💾 Reports saved to {ctx.output_dir}")

    exit_code = EXIT_STRICT if failed and ctx.strict else EXIT_OK
    return CommandOutcome(headline=float(len(failed)), exit_code=exit_code)


def _counterexample(ctx: CommandContext) -> CommandOutcome:
    config = ctx.config
    config.require("counterexample")
    block = config.counterexample
    ensemble = build_ensemble(config, workers=ctx.workers)

    label = "mean-field E sin W(s)" if block.mean_field else "sin W(s)"
    click.echo(f"🧪 Counterexample with coefficient {label}, c={block.c:g}")
    report = sin_counterexample(block.c, ensemble, build_basis(config), build_solver(config),
                                mean_field=block.mean_field)

    write_json(build_report("counterexample", config, report.to_dict()),
               ctx.output_dir / "counterexample_report.json")
    write_csv(counterexample_frame(report), ctx.output_dir / "counterexample_slices.csv")

    mid = report.mid_slice
    click.echo(f"📊 Var Y(t={report.times[mid]:.3f}) = {report.variance[mid]:.3e}, "
               f"z-score {report.z_scores[mid]:.2f}: {report.verdict}")
    click.echo(f"💾 Reports saved to {ctx.output_dir}")
    return CommandOutcome(headline=report.z_scores[mid])


@click.command("axioms")
@common_options
def axioms_command(**options):
    """Coherence axiom battery (axioms_report.json, axioms_table.txt)."""
    run_command("axioms", _axioms, **options)


@click.command("counterexample")
@common_options
def counterexample_command(**options):
    """sin W(s) translation counterexample (counterexample_report.json, counterexample_slices.csv)."""
    run_command("counterexample", _counterexample, **options)
