"""
Deterministic backward Volterra equation Y*(t) = -c + int_t^T l'(t, s) Y*(s) ds
Trapezoid quadrature on the grid and fixed-point iteration
"""

import logging
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from services.coefficients import KernelSpec
from services.exceptions import BVIEConvergenceError, GridValidationError
from services.paths import TimeGrid

logger = logging.getLogger(__name__)


def kernel_matrix(kernel: KernelSpec, grid: TimeGrid) -> np.ndarray:
    """K[i, j] = l'(t_i, t_j) on the upper triangle j >= i, zero below"""
    size = grid.steps + 1
    matrix = np.zeros((size, size))
    for i in range(size):
        for j in range(i, size):
            matrix[i, j] = kernel(grid.time(i), grid.time(j))
    if not np.all(np.isfinite(matrix)):
        raise GridValidationError(f"Kernel {kernel.tag} is not finite on the grid")
    squares = [integrate.trapezoid(matrix[i, i:] ** 2, dx=grid.dt) for i in range(size)]
    if not np.isfinite(max(squares)):
        raise GridValidationError(f"sup_t int_t^T l'(t, s)^2 ds is not finite for kernel {kernel.tag}")
    return matrix


def solve_bvie(
    kernel: KernelSpec,
    c: float,
    grid: TimeGrid,
    tol: float = 1e-12,
    max_iter: int = 500,
) -> np.ndarray:
    """
    Fixed-point iteration Y_{k+1}(t_i) = -c + trapezoid_{j>=i} l'(t_i, t_j) Y_k(t_j).

    Stops when the sup-norm change is <= tol relative to sup |Y|.
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    matrix = kernel_matrix(kernel, grid)
    size = grid.steps + 1
    dt = grid.dt

    current = np.full(size, -float(c))
    for iteration in range(1, max_iter + 1):
        updated = np.empty(size)
        for i in range(size):
            updated[i] = -c + integrate.trapezoid(matrix[i, i:] * current[i:], dx=dt)
        change = float(np.max(np.abs(updated - current)))
        scale = float(np.max(np.abs(updated)))
        current = updated
        if change <= tol * scale or change == 0.0:
            logger.debug("BVIE converged after %d iterations (change %.3e)", iteration, change)
            return current

    raise BVIEConvergenceError(
        f"BVIE fixed point did not settle within {max_iter} iterations (last change {change:.3e}); "
        "the kernel may be too large for plain iteration on this grid, refine the analysis"
    )


def closed_form_translation(
    rate: Callable[[float], float],
    c: float,
    t: float,
    horizon: float,
    grid: Optional[TimeGrid] = None,
) -> float:
    """-c * exp(int_t^T r(u) du), the integral by trapezoid on the grid resolution"""
    if grid is not None:
        inner = grid.points[(grid.points > t) & (grid.points < horizon)]
        nodes = np.concatenate([[t], inner, [horizon]])
    else:
        nodes = np.linspace(t, horizon, 1025)
    values = np.array([float(rate(u)) for u in nodes])
    integral = float(integrate.trapezoid(values, nodes)) if horizon > t else 0.0
    return -float(c) * float(np.exp(integral))


def bvie_oracle(kernel: KernelSpec, c: float, t: float, horizon: float) -> Optional[float]:
    """Exact Y*(t) for kernels independent of t, None otherwise"""
    if kernel.tag == "constant":
        return -float(c) * float(np.exp(kernel.params["r"] * (horizon - t)))
    if kernel.tag == "time_only" and kernel.rate is not None:
        integral, _ = integrate.quad(kernel.rate, t, horizon, limit=200)
        return -float(c) * float(np.exp(integral))
    return None
