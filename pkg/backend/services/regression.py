"""
Least-squares Monte Carlo estimators on a path ensemble
Conditional expectations E[. | F_{t_i}] and martingale-representation
coefficients, both regressed on polynomials of W(t_i)
"""

import logging
import threading
import weakref
from dataclasses import dataclass
from math import comb
from typing import Dict, Literal, Optional, Tuple

import numpy as np
from scipy import linalg
from sklearn.preprocessing import PolynomialFeatures

from services.exceptions import RegressionError
from services.paths import PathEnsemble

logger = logging.getLogger(__name__)

# Relative singular-value cutoff for the rank check
_RCOND = 1e-12


@dataclass(frozen=True)
class BasisSpec:
    """Polynomial basis in the d components of W(t_i) with ridge weight"""

    kind: Literal["polynomial"] = "polynomial"
    degree: int = 2
    ridge: float = 1e-8

    def __post_init__(self):
        if self.kind != "polynomial":
            raise RegressionError(f"Unsupported basis kind: {self.kind}")
        if self.degree < 0:
            raise RegressionError(f"Basis degree must be >= 0, got {self.degree}")
        if not np.isfinite(self.ridge) or self.ridge < 0:
            raise RegressionError(f"Ridge weight must be >= 0, got {self.ridge}")

    def size(self, brownian_dim: int) -> int:
        return comb(brownian_dim + self.degree, self.degree)


@dataclass(frozen=True)
class ConditionalEstimate:
    values: np.ndarray
    coefficients: np.ndarray
    slice_index: int


@dataclass(frozen=True)
class SliceFactor:
    """
    Thin factor of one slice's ridge-augmented design.

    basis_t holds the path rows of U transposed (K x M): fitted values are
    U U^T y and coefficients to_coefficients @ U^T y. It is the only
    per-path array kept for a slice.
    """

    basis_t: np.ndarray
    to_coefficients: np.ndarray

    def project(self, targets: np.ndarray) -> np.ndarray:
        # Row-wise pairwise sums: fixed reduction order, one target at a time
        return np.sum(self.basis_t * targets[None, :], axis=1)

    def expand(self, weights: np.ndarray) -> np.ndarray:
        return np.sum(self.basis_t * weights[:, None], axis=0)

    @property
    def nbytes(self) -> int:
        return self.basis_t.nbytes + self.to_coefficients.nbytes


class SliceRegressor:
    """
    Cached per-slice factors for one (ensemble, basis) pair.

    For each slice the ridge-augmented design is factorized once by SVD;
    every later regression is a fixed-order reduction over paths, so
    results do not depend on how many targets are regressed together.
    """

    def __init__(self, ensemble: PathEnsemble, basis: BasisSpec):
        paths, dim = ensemble.paths, ensemble.brownian_dim
        size = basis.size(dim)
        if size * 10 >= paths:
            raise RegressionError(
                f"Basis of size {size} is too large for {paths} paths (needs size < M/10)"
            )
        self.ensemble = ensemble
        self.basis = basis
        self.size = size
        self._features = PolynomialFeatures(degree=basis.degree, include_bias=True)
        self._factors: Dict[int, SliceFactor] = {}
        self._lock = threading.Lock()
        self.martingale_rmse: Optional[float] = None

    def factor(self, slice_index: int) -> SliceFactor:
        cached = self._factors.get(slice_index)
        if cached is not None:
            return cached
        with self._lock:
            if slice_index not in self._factors:
                self._factors[slice_index] = self._build(slice_index)
            return self._factors[slice_index]

    @property
    def cached_bytes(self) -> int:
        return sum(factor.nbytes for factor in self._factors.values())

    def _build(self, slice_index: int) -> SliceFactor:
        if not 0 <= slice_index <= self.ensemble.grid.steps:
            raise RegressionError(
                f"slice_index {slice_index} outside 0..{self.ensemble.grid.steps}"
            )
        paths = self.ensemble.paths
        if slice_index == 0:
            # F_0 is trivial: plain sample mean, non-constant coefficients zero
            basis_t = np.zeros((self.size, paths))
            basis_t[0, :] = 1.0 / np.sqrt(paths)
            to_coefficients = np.zeros((self.size, self.size))
            to_coefficients[0, 0] = 1.0 / np.sqrt(paths)
        else:
            design = self._features.fit_transform(self.ensemble.state_at(slice_index))
            basis_t, to_coefficients = self._factorize(design, slice_index)
        basis_t.setflags(write=False)
        to_coefficients.setflags(write=False)
        return SliceFactor(basis_t=basis_t, to_coefficients=to_coefficients)

    def _factorize(self, design: np.ndarray, slice_index: int) -> Tuple[np.ndarray, np.ndarray]:
        paths = design.shape[0]
        ridge = self.basis.ridge
        if ridge > 0 and self.size > 1:
            penalty = np.zeros((self.size - 1, self.size))
            penalty[:, 1:] = np.sqrt(ridge) * np.eye(self.size - 1)
            augmented = np.vstack([design, penalty])
        else:
            augmented = design

        u, s, vt = linalg.svd(augmented, full_matrices=False, lapack_driver="gesvd")
        if s[-1] <= _RCOND * s[0] * max(augmented.shape):
            if ridge == 0:
                raise RegressionError(
                    f"Normal equations are singular at slice {slice_index}; use a ridge weight > 0"
                )
            raise RegressionError(f"Regression design is rank deficient at slice {slice_index}")
        # design = U_paths S V^T, so the hat matrix is U_paths U_paths^T
        return np.ascontiguousarray(u[:paths, :].T), np.ascontiguousarray(vt.T / s)

    def fit(self, targets: np.ndarray, slice_index: int) -> np.ndarray:
        """Coefficients of the projection of targets at the slice"""
        targets = _checked(targets, self.ensemble.paths)
        factor = self.factor(slice_index)
        return factor.to_coefficients @ factor.project(targets)

    def conditional(self, targets: np.ndarray, slice_index: int) -> ConditionalEstimate:
        targets = _checked(targets, self.ensemble.paths)
        factor = self.factor(slice_index)
        if targets[0] == targets.min() == targets.max():
            # Constants are F_t-measurable: reproduce them exactly
            coefficients = np.zeros(self.size)
            coefficients[0] = targets[0]
            return ConditionalEstimate(values=targets.copy(), coefficients=coefficients,
                                       slice_index=slice_index)
        weights = factor.project(targets)
        return ConditionalEstimate(
            values=factor.expand(weights),
            coefficients=factor.to_coefficients @ weights,
            slice_index=slice_index,
        )

    def martingale(
        self,
        targets: np.ndarray,
        slice_index: int,
        measurable_at: Optional[int] = None,
    ) -> np.ndarray:
        """
        E[targets * dW_k | F_{t_i}] / dt for every component, shape (M, d).

        measurable_at=k declares targets a function of W(t_k) alone. For
        k > i the targets are first replaced by their regression on
        W(t_{i+1}) (Markov property), which drops the noise of the
        increments after t_{i+1} without changing the estimand.
        """
        if not 0 <= slice_index < self.ensemble.grid.steps:
            raise RegressionError(
                f"slice_index {slice_index} outside 0..{self.ensemble.grid.steps - 1}"
            )
        targets = _checked(targets, self.ensemble.paths)
        out = np.zeros((self.ensemble.paths, self.ensemble.brownian_dim))
        if targets[0] == targets.min() == targets.max():
            return out
        if measurable_at is not None and measurable_at > slice_index:
            later = self.conditional(targets, slice_index + 1).values
            centered = later - self.conditional(later, slice_index).values
        else:
            # Centering leaves E[. dW | F_t] unchanged and removes the noise of the mean
            centered = targets - targets.mean()
        increments = self.ensemble.increment_at(slice_index)
        dt = self.ensemble.grid.dt
        for k in range(self.ensemble.brownian_dim):
            out[:, k] = self.conditional(centered * increments[:, k], slice_index).values / dt
        return out


def _checked(targets: np.ndarray, paths: int) -> np.ndarray:
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != (paths,):
        raise RegressionError(f"targets must have shape ({paths},), got {targets.shape}")
    if not np.all(np.isfinite(targets)):
        raise RegressionError("targets contain NaN or infinite values")
    return targets


_regressors: "weakref.WeakKeyDictionary[PathEnsemble, Dict[BasisSpec, SliceRegressor]]" = (
    weakref.WeakKeyDictionary()
)
_registry_lock = threading.Lock()


def regressor_for(ensemble: PathEnsemble, basis: BasisSpec) -> SliceRegressor:
    """Shared SliceRegressor for the pair, built on first use"""
    with _registry_lock:
        per_basis = _regressors.setdefault(ensemble, {})
        regressor = per_basis.get(basis)
        if regressor is None:
            regressor = SliceRegressor(ensemble, basis)
            per_basis[basis] = regressor
        return regressor


def regress_conditional(
    targets: np.ndarray, ensemble: PathEnsemble, slice_index: int, basis: BasisSpec
) -> ConditionalEstimate:
    """Least-squares estimate of E[targets | F_{t_slice}]"""
    return regressor_for(ensemble, basis).conditional(targets, slice_index)


def martingale_coefficient(
    targets: np.ndarray,
    ensemble: PathEnsemble,
    slice_index: int,
    basis: BasisSpec,
    measurable_at: Optional[int] = None,
) -> np.ndarray:
    """Discrete Z integrand of targets over [t_i, t_{i+1}], shape (M, d)"""
    return regressor_for(ensemble, basis).martingale(targets, slice_index, measurable_at)


def measure_regression_rmse(ensemble: PathEnsemble, basis: BasisSpec) -> float:
    """
    Worst per-slice RMSE of the martingale test E[W(T) | F_t] = W(t).

    Axiom tolerances are expressed as multiples of this number.
    """
    regressor = regressor_for(ensemble, basis)
    if regressor.martingale_rmse is not None:
        return regressor.martingale_rmse
    terminal = ensemble.terminal_state()[:, 0]
    worst = 0.0
    for i in range(ensemble.grid.steps + 1):
        fitted = regressor.conditional(terminal, i).values
        rmse = float(np.sqrt(np.mean((fitted - ensemble.state_at(i)[:, 0]) ** 2)))
        worst = max(worst, rmse)
    logger.debug("Martingale-test regression RMSE: %.3e", worst)
    regressor.martingale_rmse = worst
    return worst
