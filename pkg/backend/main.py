"""
Main CLI Application
Combines the solver, risk-measure and Volterra commands
"""

import json
import logging

import click

from config.settings import settings
from commands import axioms, solve, volterra
from utils.helpers import list_runs, resolve_output_dir


@click.group()
@click.version_option(settings.app_version, prog_name=settings.app_name)
@click.option("--verbose", is_flag=True, default=False, help="Debug logging.")
def cli(verbose: bool):
    """BSVIE M-solutions and dynamic coherent risk measures."""
    logging.basicConfig(
        level=logging.DEBUG if (verbose or settings.debug) else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@cli.command("history")
@click.option("--out", "out", default=None, type=click.Path(file_okay=False),
              help="Output directory holding the run ledger.")
@click.option("--limit", type=click.IntRange(min=1), default=20)
def history(out, limit):
    """Recent runs recorded in the output directory's ledger."""
    runs = list_runs(resolve_output_dir(out), limit=limit)
    if not runs:
        click.echo("📭 No runs recorded")
        return
    for run in runs:
        click.echo(json.dumps(run, sort_keys=True))


# Include commands
cli.add_command(solve.solve_command)
cli.add_command(solve.risk_command)
cli.add_command(solve.convergence_command)
cli.add_command(axioms.axioms_command)
cli.add_command(axioms.counterexample_command)
cli.add_command(volterra.bvie_command)


if __name__ == "__main__":
    cli()
