"""
Utility functions for artifact files and the run ledger
"""

import logging
import os
import tempfile
from datetime import datetime
from pathlib import Path
from typing import Optional

from config.settings import settings
from models.database import Run, init_db

logger = logging.getLogger(__name__)


def resolve_output_dir(out: Optional[str] = None) -> Path:
    """--out if given, else settings.output_dir (BSVIE_OUTPUT_DIR); created if missing"""
    base_dir = Path(out) if out else Path(settings.output_dir)
    base_dir.mkdir(parents=True, exist_ok=True)
    return base_dir


def save_artifact(content: str, filename: str, directory: Path) -> Path:
    """Write-then-rename so readers never see a partial file"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    file_path = directory / filename

    handle, temp_name = tempfile.mkstemp(prefix=f".{filename}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as stream:
            stream.write(content)
        os.replace(temp_name, file_path)
    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise
    logger.debug("Saved artifact %s", file_path)
    return file_path


def start_run(
    output_dir: Path,
    command: str,
    config_path: Optional[str],
    seed: Optional[int],
    settings_used: Optional[dict] = None,
) -> Optional[int]:
    """Record a 'processing' row; None when history is disabled"""
    if not settings.record_history:
        return None
    Session = init_db(output_dir)
    with Session() as session:
        run = Run(
            command=command,
            status="processing",
            config_path=config_path,
            seed=seed,
            settings_used=settings_used,
        )
        session.add(run)
        session.commit()
        return run.id


def finish_run(
    output_dir: Path,
    run_id: Optional[int],
    status: str,
    started_at: datetime,
    exit_code: int = 0,
    headline_value: Optional[float] = None,
    error_message: Optional[str] = None,
    settings_used: Optional[dict] = None,
) -> None:
    if run_id is None:
        return
    Session = init_db(output_dir)
    with Session() as session:
        run = session.get(Run, run_id)
        if run is None:
            logger.warning("Run %s vanished from the ledger", run_id)
            return
        now = datetime.utcnow()
        run.status = status
        run.exit_code = exit_code
        run.headline_value = headline_value
        run.error_message = error_message
        if settings_used is not None:
            run.settings_used = settings_used
        run.completed_at = now
        run.processing_time_seconds = (now - started_at).total_seconds()
        session.commit()


def list_runs(output_dir: Path, limit: int = 20) -> list:
    """Most recent ledger rows as dicts"""
    Session = init_db(output_dir)
    with Session() as session:
        rows = session.query(Run).order_by(Run.id.desc()).limit(limit).all()
        return [row.to_dict() for row in rows]
