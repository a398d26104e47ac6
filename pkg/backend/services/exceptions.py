"""
Domain exceptions raised by the numerical services
Commands translate these into exit codes
"""

from typing import Optional


class BSVIEError(Exception):
    """Base class for engine errors"""


class GridValidationError(BSVIEError, ValueError):
    """Invalid grid, ensemble or basis parameters"""


class RegressionError(BSVIEError, ValueError):
    """Regression inputs are unusable (NaN targets, singular design)"""


class NonFiniteGeneratorError(BSVIEError, ArithmeticError):
    """The generator returned NaN/inf for some path"""

    def __init__(self, t_index: int, s_index: int, path: int, value: float):
        self.t_index = t_index
        self.s_index = s_index
        self.path = path
        self.value = value
        super().__init__(
            f"Generator returned {value!r} at t-slice {t_index}, s-slice {s_index}, path {path}"
        )


class SolverDivergenceError(BSVIEError, RuntimeError):
    """Picard iterates grew for several consecutive iterations"""

    def __init__(self, message: str, report: Optional[object] = None):
        self.report = report
        super().__init__(message)


class BVIEConvergenceError(BSVIEError, RuntimeError):
    """Deterministic fixed-point iteration did not settle"""


class ConfigError(BSVIEError, ValueError):
    """A config block required by the command is missing or inconsistent"""
