"""
Shared command plumbing: common flags, config loading, exit codes and
the run-ledger lifecycle around every command
"""

import json
import logging
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Callable, Optional

import click
from pydantic import ValidationError

from config.settings import settings
from models.scenario import ScenarioConfig
from services.exceptions import (
    BVIEConvergenceError,
    ConfigError,
    GridValidationError,
    NonFiniteGeneratorError,
    RegressionError,
    SolverDivergenceError,
)
from utils.helpers import finish_run, resolve_output_dir, start_run

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_STRICT = 4


@dataclass
class CommandContext:
    name: str
    config: ScenarioConfig
    config_path: str
    output_dir: Path
    workers: int
    strict: bool


@dataclass
class CommandOutcome:
    headline: Optional[float] = None
    exit_code: int = EXIT_OK


def common_options(func):
    """--config, --out, --seed, --threads, --strict"""
    options = [
        click.option("--config", "config_path", required=True,
                     type=click.Path(exists=True, dir_okay=False), help="Scenario JSON file."),
        click.option("--out", "out", default=None, type=click.Path(file_okay=False),
                     help="Output directory (default: BSVIE_OUTPUT_DIR)."),
        click.option("--seed", type=click.IntRange(min=0), default=None, help="Overrides the config seed."),
        click.option("--threads", type=click.IntRange(min=1), default=None,
                     help="Worker threads (default: BSVIE_MAX_WORKERS)."),
        click.option("--strict", is_flag=True, default=False, help="Exit 4 when an axiom check fails."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def load_config(config_path: str, seed: Optional[int] = None) -> ScenarioConfig:
    try:
        data = json.loads(Path(config_path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{config_path} is not valid JSON: {e}") from e
    config = ScenarioConfig.model_validate(data)
    if seed is not None:
        config = config.model_copy(update={"seed": seed})
    return config


def _validation_messages(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "config"
        lines.append(f"   {location}: {item['msg']}")
    return "\n".join(lines)


def run_command(
    name: str,
    handler: Callable[[CommandContext], CommandOutcome],
    config_path: str,
    out: Optional[str],
    seed: Optional[int],
    threads: Optional[int],
    strict: bool,
) -> None:
    """Load, run, record; exceptions become exit codes"""
    started_at = datetime.utcnow()
    output_dir = resolve_output_dir(out)
    run_id = start_run(output_dir, name, config_path, seed)
    resolved = None

    try:
        config = load_config(config_path, seed)
        resolved = config.model_dump(mode="json")
        context = CommandContext(
            name=name,
            config=config,
            config_path=config_path,
            output_dir=output_dir,
            workers=threads or settings.max_workers,
            strict=strict,
        )
        outcome = handler(context)
    except ValidationError as e:
        click.echo(f"❌ Invalid config {config_path}:\n{_validation_messages(e)}", err=True)
        finish_run(output_dir, run_id, "failed", started_at, exit_code=EXIT_CONFIG, error_message=str(e))
        raise SystemExit(EXIT_CONFIG)
    except (ConfigError, GridValidationError, RegressionError) as e:
        click.echo(f"❌ Config error: {e}", err=True)
        finish_run(output_dir, run_id, "failed", started_at, exit_code=EXIT_CONFIG,
                   error_message=str(e), settings_used=resolved)
        raise SystemExit(EXIT_CONFIG)
    except (SolverDivergenceError, BVIEConvergenceError, NonFiniteGeneratorError) as e:
        click.echo(f"❌ Solver failure: {e}", err=True)
        finish_run(output_dir, run_id, "failed", started_at, exit_code=EXIT_SOLVER,
                   error_message=str(e), settings_used=resolved)
        raise SystemExit(EXIT_SOLVER)
    except Exception as e:
        logger.exception("Unexpected error in %s", name)
        finish_run(output_dir, run_id, "failed", started_at, exit_code=1,
                   error_message=str(e), settings_used=resolved)
        raise

    finish_run(output_dir, run_id, "completed", started_at, exit_code=outcome.exit_code,
               headline_value=outcome.headline, settings_used=resolved)
    if outcome.exit_code != EXIT_OK:
        raise SystemExit(outcome.exit_code)
