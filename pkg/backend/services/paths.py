"""
Time discretization and Brownian path ensembles
Every path draws from its own SeedSequence substream, so an ensemble is
identical whatever the worker count used to generate it
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from services.exceptions import GridValidationError

logger = logging.getLogger(__name__)

# Paths handed to one worker at a time
_CHUNK_SIZE = 1024


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Uniform partition of [0, T] into N steps"""

    horizon: float
    steps: int
    points: np.ndarray = field(repr=False)

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    def time(self, index: int) -> float:
        return float(self.points[index])

    def index_of(self, t: float) -> int:
        """Smallest grid index whose time is >= t; t within 1e-9 steps above a node rounds down to it"""
        idx = int(np.ceil(t / self.dt - 1e-9))
        return min(max(idx, 0), self.steps)


def build_time_grid(horizon: float, steps: int) -> TimeGrid:
    """Build a uniform grid t_i = i*T/N, i = 0..N"""
    if not np.isfinite(horizon) or horizon <= 0:
        raise GridValidationError(f"horizon must be > 0, got {horizon}")
    if int(steps) != steps or steps < 2:
        raise GridValidationError(f"steps must be an integer >= 2, got {steps}")
    steps = int(steps)
    dt = horizon / steps
    points = np.arange(steps + 1, dtype=np.float64) * dt
    points[-1] = float(horizon)
    points.setflags(write=False)
    return TimeGrid(horizon=float(horizon), steps=steps, points=points)


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """
    Brownian increments and states on a grid.

    increments[m, i, k] is the k-th component over [t_i, t_{i+1}];
    states[m, i, k] is W(t_i) with states[:, 0, :] == 0. Increments are
    the exact differences of the states.
    """

    grid: TimeGrid
    seed: int
    increments: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)

    @property
    def paths(self) -> int:
        return self.increments.shape[0]

    @property
    def brownian_dim(self) -> int:
        return self.increments.shape[2]

    def state_at(self, index: int) -> np.ndarray:
        """W(t_index) for every path, shape (M, d)"""
        return self.states[:, index, :]

    def increment_at(self, index: int) -> np.ndarray:
        """Delta W over [t_index, t_index+1], shape (M, d)"""
        return self.increments[:, index, :]

    def terminal_state(self) -> np.ndarray:
        return self.states[:, -1, :]

    def with_increments(self, increments: np.ndarray) -> "PathEnsemble":
        """A new ensemble on the same grid and seed rebuilt from increments"""
        return _assemble(self.grid, self.seed, np.asarray(increments, dtype=np.float64))


def path_generator(seed: int, path: int) -> np.random.Generator:
    """Counter-style substream for one path, derived from (seed, path)"""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(path),)))


def _draw_chunk(seed: int, start: int, stop: int, steps: int, dim: int, scale: float) -> np.ndarray:
    out = np.empty((stop - start, steps, dim), dtype=np.float64)
    for offset, m in enumerate(range(start, stop)):
        out[offset] = path_generator(seed, m).standard_normal((steps, dim)) * scale
    return out


def _assemble(grid: TimeGrid, seed: int, raw_increments: np.ndarray) -> PathEnsemble:
    paths, steps, dim = raw_increments.shape
    states = np.zeros((paths, steps + 1, dim), dtype=np.float64)
    np.cumsum(raw_increments, axis=1, out=states[:, 1:, :])
    # Increments are redefined from the states so W[i+1] - W[i] == dW[i] holds exactly
    increments = np.diff(states, axis=1)
    states.setflags(write=False)
    increments.setflags(write=False)
    return PathEnsemble(grid=grid, seed=int(seed), increments=increments, states=states)


def sample_paths(
    grid: TimeGrid,
    paths: int,
    brownian_dim: int,
    seed: int,
    workers: Optional[int] = None,
) -> PathEnsemble:
    """Sample M paths of a d-dimensional Brownian motion on the grid"""
    if int(paths) != paths or paths < 1:
        raise GridValidationError(f"paths must be a positive integer, got {paths}")
    if int(brownian_dim) != brownian_dim or brownian_dim < 1:
        raise GridValidationError(f"brownian_dim must be a positive integer, got {brownian_dim}")

    paths, brownian_dim = int(paths), int(brownian_dim)
    scale = np.sqrt(grid.dt)
    bounds = [(start, min(start + _CHUNK_SIZE, paths)) for start in range(0, paths, _CHUNK_SIZE)]

    if workers is not None and workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            chunks = list(executor.map(
                lambda b: _draw_chunk(seed, b[0], b[1], grid.steps, brownian_dim, scale), bounds
            ))
    else:
        chunks = [_draw_chunk(seed, a, b, grid.steps, brownian_dim, scale) for a, b in bounds]

    ensemble = _assemble(grid, seed, np.concatenate(chunks, axis=0))
    logger.debug(
        "Sampled %d paths (N=%d, d=%d, seed=%d)", paths, grid.steps, brownian_dim, seed
    )
    return ensemble
