"""
Shared fixtures: path ensembles are expensive, so they are built once per session
"""

import json

import pytest

from services.bsvie_solver import SolverSettings
from services.paths import build_time_grid, sample_paths
from services.regression import BasisSpec


@pytest.fixture(scope="session")
def desk_ensemble():
    """M=20000, N=32, d=1, T=1, seed 42"""
    return sample_paths(build_time_grid(1.0, 32), 20000, 1, seed=42)


@pytest.fixture(scope="session")
def small_ensemble():
    """M=5000, N=16, d=1, T=1, seed 7"""
    return sample_paths(build_time_grid(1.0, 16), 5000, 1, seed=7)


@pytest.fixture(scope="session")
def basis():
    return BasisSpec(degree=2, ridge=1e-8)


@pytest.fixture(scope="session")
def tight_solver():
    return SolverSettings(tol=1e-10, max_iter=60)


@pytest.fixture
def write_config(tmp_path):
    """Write a scenario dict to a JSON file and return its path"""

    def _write(data: dict, name: str = "scenario.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    return _write
