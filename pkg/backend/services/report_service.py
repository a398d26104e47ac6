"""
Report service
Builds the per-command pandas tables and JSON payloads; files are written
through utils.helpers so every artifact lands atomically
"""

import json
import math
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from config.settings import settings
from models.scenario import ScenarioConfig
from services.bsvie_solver import AdaptedGrid, MSolutionEstimate
from services.paths import TimeGrid
from services.risk_measures import AxiomReport, CounterexampleReport
from utils.helpers import save_artifact


def _jsonable(value):
    """numpy scalars/arrays to builtins, non-finite floats to None"""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def build_report(command: str, config: ScenarioConfig, payload: dict) -> dict:
    """Every report embeds the schema version and the fully resolved config"""
    return {
        "schema_version": settings.schema_version,
        "app_version": settings.app_version,
        "command": command,
        "config": config.model_dump(mode="json"),
        "payload": _jsonable(payload),
    }


def write_json(report: dict, path: Path) -> Path:
    text = json.dumps(_jsonable(report), sort_keys=True, indent=2)
    return save_artifact(text + "\n", path.name, path.parent)


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    text = frame.to_csv(index=False, float_format=settings.csv_float_format)
    return save_artifact(text, path.name, path.parent)


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

def solve_slices_frame(estimate: MSolutionEstimate, residual: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame({
        "t": estimate.grid.points,
        "meanY": estimate.y.mean(),
        "stdY": estimate.y.std(),
        "mResidual": residual,
    })


def rho_curve_frame(values: AdaptedGrid, grid: TimeGrid) -> pd.DataFrame:
    return pd.DataFrame({
        "t": grid.points,
        "meanRho": values.mean(),
        "stdRho": values.std(),
        "stderrRho": values.stderr(),
        "minRho": values.values.min(axis=1),
        "maxRho": values.values.max(axis=1),
    })


def axioms_frame(report: AxiomReport) -> pd.DataFrame:
    rows = [
        {
            "axiom": result.name,
            "holds": "PASS" if result.holds else "FAIL",
            "worstViolation": result.worst_violation,
            "toleranceUsed": result.tolerance_used,
            "cases": len(result.details.get("cases", [])),
            "slices": len(result.slices_tested),
        }
        for result in report.ordered()
    ]
    return pd.DataFrame(rows, columns=["axiom", "holds", "worstViolation", "toleranceUsed", "cases", "slices"])


def format_axiom_table(report: AxiomReport) -> str:
    frame = axioms_frame(report)
    return frame.to_string(index=False, formatters={
        "worstViolation": "{:.3e}".format,
        "toleranceUsed": "{:.3e}".format,
    })


def bvie_frame(grid: TimeGrid, y_star: np.ndarray, oracle: Optional[List[Optional[float]]]) -> pd.DataFrame:
    frame = pd.DataFrame({"t": grid.points, "yStar": y_star})
    if oracle is not None:
        exact = np.array([np.nan if v is None else v for v in oracle], dtype=np.float64)
        frame["closedForm"] = exact
        frame["absError"] = np.abs(y_star - exact)
    return frame


def counterexample_frame(report: CounterexampleReport) -> pd.DataFrame:
    return pd.DataFrame({
        "t": report.times,
        "meanY": report.mean,
        "varY": report.variance,
        "seVar": report.variance_stderr,
        "zScore": report.z_scores,
    })


def convergence_frame(rows: List[dict]) -> pd.DataFrame:
    frame = pd.DataFrame(rows, columns=["ladder", "steps", "paths", "value", "stderr", "oracle", "error"])
    # Ratio of consecutive errors within each ladder
    frame["ratio"] = frame.groupby("ladder", sort=False)["error"].transform(lambda e: e.shift(1) / e)
    return frame
