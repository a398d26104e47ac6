"""
Deterministic Volterra command: bvie
"""

import click
import numpy as np

from commands.common import CommandContext, CommandOutcome, common_options, run_command
from services.report_service import build_report, bvie_frame, write_csv, write_json
from services.scenario_service import build_grid, build_kernel
from services.volterra import bvie_oracle, solve_bvie


def _bvie(ctx: CommandContext) -> CommandOutcome:
    config = ctx.config
    config.require("bvie")
    block = config.bvie
    kernel = build_kernel(config)
    grid = build_grid(config)

    click.echo(f"🧮 Solving Y*(t) = -c + int l'(t, s) Y*(s) ds for kernel {kernel.tag}, c={block.c:g}, N={grid.steps}")
    y_star = solve_bvie(kernel, block.c, grid, tol=block.tol, max_iter=block.max_iter)

    exact = [bvie_oracle(kernel, block.c, grid.time(i), grid.horizon) for i in range(grid.steps + 1)]
    oracle = exact if exact[0] is not None else None
    max_error = float(np.max(np.abs(y_star - np.asarray(oracle)))) if oracle is not None else None
    payload = {
        "kernel": {"tag": kernel.tag, **kernel.params},
        "c": block.c,
        "y_star0": float(y_star[0]),
        "closed_form_y0": oracle[0] if oracle is not None else None,
        "max_abs_error": max_error,
        "y_star": y_star.tolist(),
    }
    write_json(build_report("bvie", config, payload), ctx.output_dir / "bvie_report.json")
    write_csv(bvie_frame(grid, y_star, oracle), ctx.output_dir / "bvie_table.csv")

    click.echo(f"📈 Y*(0) = {y_star[0]:.10f}"
               + (f" (closed form {oracle[0]:.10f})" if oracle is not None else ""))
    click.echo(f"💾 Reports saved to {ctx.output_dir}")
    return CommandOutcome(headline=float(y_star[0]))


@click.command("bvie")
@common_options
def bvie_command(**options):
    """Deterministic backward Volterra equation (bvie_report.json, bvie_table.csv)."""
    run_command("bvie", _bvie, **options)
