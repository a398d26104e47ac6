"""
Declarative generators, terminal claims and deterministic kernels

Evaluators are vectorized over paths:
    generator  g(t, s, y[M], z[M, d], state[M, d]) -> [M]
    terminal   psi(t, w_T[M, d]) -> [M]
    kernel     l'(t, s) -> float
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator

GeneratorFn = Callable[[float, float, np.ndarray, np.ndarray, np.ndarray], np.ndarray]
TerminalFn = Callable[[float, np.ndarray], np.ndarray]
CoefficientFn = Callable[[float, float, np.ndarray], Union[np.ndarray, float]]


# ---------------------------------------------------------------------------
# Deterministic kernels l'(t, s)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelSpec:
    """Deterministic kernel l'(t, s); time_only kernels depend on s alone"""

    evaluator: Callable[[float, float], float]
    tag: str = "general"
    rate: Optional[Callable[[float], float]] = None
    params: dict = field(default_factory=dict, compare=False)

    def __call__(self, t: float, s: float) -> float:
        return float(self.evaluator(t, s))

    @classmethod
    def constant(cls, r: float) -> "KernelSpec":
        r = float(r)
        return cls(evaluator=lambda t, s: r, tag="constant", rate=lambda u: r, params={"r": r})

    @classmethod
    def time_only(cls, rate: Callable[[float], float], **params) -> "KernelSpec":
        return cls(evaluator=lambda t, s: float(rate(s)), tag="time_only", rate=rate, params=params)

    @classmethod
    def general(cls, evaluator: Callable[[float, float], float], **params) -> "KernelSpec":
        return cls(evaluator=evaluator, tag="general", params=params)


# ---------------------------------------------------------------------------
# Coefficients l1, r1 (deterministic or adapted)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Coefficient:
    """A coefficient c(t, s, W(s)) with a sup bound"""

    fn: CoefficientFn
    bound: float
    deterministic: bool
    kind: str
    params: dict = field(default_factory=dict, compare=False)

    def __call__(self, t: float, s: float, state: np.ndarray):
        return self.fn(t, s, state)

    def value(self, t: float, s: float) -> float:
        if not self.deterministic:
            raise ValueError(f"{self.kind} coefficient depends on the path")
        return float(np.asarray(self.fn(t, s, np.zeros((1, 1)))).reshape(-1)[0])

    def kernel(self) -> Optional[KernelSpec]:
        """The coefficient as a deterministic kernel, or None if it is random"""
        if not self.deterministic:
            return None
        if self.kind == "constant":
            return KernelSpec.constant(self.params["value"])
        if self.kind == "time_table":
            times, values = self.params["times"], self.params["values"]
            return KernelSpec.time_only(
                lambda u: float(np.interp(u, times, values)), times=times, values=values
            )
        return KernelSpec.general(self.value)

    @classmethod
    def constant(cls, value: float) -> "Coefficient":
        value = float(value)
        return cls(fn=lambda t, s, w: value, bound=abs(value), deterministic=True,
                   kind="constant", params={"value": value})

    @classmethod
    def time_table(cls, times: Sequence[float], values: Sequence[float]) -> "Coefficient":
        """Time-only coefficient r(s), linearly interpolated from a table"""
        times = [float(x) for x in times]
        values = [float(v) for v in values]
        return cls(
            fn=lambda t, s, w: float(np.interp(s, times, values)),
            bound=float(np.max(np.abs(values))),
            deterministic=True,
            kind="time_table",
            params={"times": times, "values": values},
        )

    @classmethod
    def grid_table(cls, points: np.ndarray, table: np.ndarray) -> "Coefficient":
        """Deterministic l(t, s) tabulated on grid points, bilinear in between"""
        table = np.asarray(table, dtype=np.float64)
        interpolator = RegularGridInterpolator((points, points), table)
        return cls(
            fn=lambda t, s, w: float(interpolator([[t, s]])[0]),
            bound=float(np.max(np.abs(table))),
            deterministic=True,
            kind="grid_table",
        )

    @classmethod
    def sin_w(cls, scale: float = 1.0, shift: float = 0.0) -> "Coefficient":
        """Adapted coefficient scale * (shift + sin W_1(s))"""
        scale, shift = float(scale), float(shift)
        return cls(
            fn=lambda t, s, w: scale * (shift + np.sin(w[:, 0])),
            bound=abs(scale) * (abs(shift) + 1.0),
            deterministic=False,
            kind="sin_w",
            params={"scale": scale, "shift": shift},
        )


def as_coefficient(value: Union[float, Coefficient]) -> Coefficient:
    return value if isinstance(value, Coefficient) else Coefficient.constant(value)


def _broadcast(value, paths: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(value, dtype=np.float64), (paths,))


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorSpec:
    """
    Generator g(t, s, y, z) with declared Lipschitz bounds.

    lipschitz_z is None for generators without a global z-bound
    (the quadratic negative control).
    """

    evaluator: GeneratorFn
    lipschitz_y: float
    lipschitz_z: Optional[float]
    tag: str
    params: dict = field(default_factory=dict, compare=False)
    y_coefficient: Optional[Coefficient] = None
    depends_on_state: bool = True
    linear: bool = False
    positively_homogeneous: bool = False

    def __call__(self, t: float, s: float, y: np.ndarray, z: np.ndarray, state: np.ndarray) -> np.ndarray:
        return _broadcast(self.evaluator(t, s, y, z, state), y.shape[0])

    def y_kernel(self) -> Optional[KernelSpec]:
        """Deterministic y-coefficient as a kernel l'(t, s), if there is one"""
        if self.y_coefficient is None:
            return None
        return self.y_coefficient.kernel()

    def default_beta(self) -> float:
        lz = self.lipschitz_z if self.lipschitz_z is not None else 1.0
        return 8.0 * max(self.lipschitz_y ** 2, lz, 1.0)

    def describe(self) -> dict:
        return {"tag": self.tag, **self.params}

    @classmethod
    def zero(cls) -> "GeneratorSpec":
        return cls(
            evaluator=lambda t, s, y, z, w: 0.0,
            lipschitz_y=0.0,
            lipschitz_z=0.0,
            tag="zero",
            y_coefficient=Coefficient.constant(0.0),
            depends_on_state=False,
            linear=True,
            positively_homogeneous=True,
        )

    @classmethod
    def linear_form(cls, l1: Union[float, Coefficient] = 0.0,
                    l2: Union[float, Sequence[float]] = 0.0) -> "GeneratorSpec":
        """g = l1(t, s) y + l2 . z, the linear risk generator"""
        l1 = as_coefficient(l1)
        l2_vec = np.atleast_1d(np.asarray(l2, dtype=np.float64))

        def evaluate(t, s, y, z, w):
            return l1(t, s, w) * y + z @ np.broadcast_to(l2_vec, (z.shape[1],))

        return cls(
            evaluator=evaluate,
            lipschitz_y=l1.bound,
            lipschitz_z=float(np.linalg.norm(l2_vec)),
            tag="linear",
            params={"l1": l1.params or l1.kind, "l2": l2_vec.tolist()},
            y_coefficient=l1,
            linear=True,
            positively_homogeneous=True,
        )

    @classmethod
    def kappa_abs_z(cls, kappa: float, r1: Union[float, Coefficient] = 0.0) -> "GeneratorSpec":
        """g = r1(s) y + kappa |z| with deterministic r1"""
        r1 = as_coefficient(r1)
        if not r1.deterministic:
            raise ValueError("r1 must be deterministic for the kappa|z| generator")
        kappa = float(kappa)

        def evaluate(t, s, y, z, w):
            return r1(t, s, w) * y + kappa * np.linalg.norm(z, axis=1)

        return cls(
            evaluator=evaluate,
            lipschitz_y=r1.bound,
            lipschitz_z=abs(kappa),
            tag="kappa_abs_z",
            params={"kappa": kappa, "r1": r1.params or r1.kind},
            y_coefficient=r1,
            positively_homogeneous=kappa >= 0,
        )

    @classmethod
    def quadratic(cls, scale: float = 1.0) -> "GeneratorSpec":
        """g = scale |z|^2; no global z-bound, kept as a negative control"""
        scale = float(scale)
        return cls(
            evaluator=lambda t, s, y, z, w: scale * np.sum(z * z, axis=1),
            lipschitz_y=0.0,
            lipschitz_z=None,
            tag="quadratic",
            params={"l": scale},
            y_coefficient=Coefficient.constant(0.0),
        )

    @classmethod
    def custom(cls, evaluator: GeneratorFn, lipschitz_y: float,
               lipschitz_z: Optional[float], **params) -> "GeneratorSpec":
        return cls(evaluator=evaluator, lipschitz_y=float(lipschitz_y),
                   lipschitz_z=None if lipschitz_z is None else float(lipschitz_z),
                   tag="custom", params=params)


# ---------------------------------------------------------------------------
# Terminal claims
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TerminalSpec:
    """Claim psi(t, W(T)); may depend on t (time-inconsistent claims)"""

    evaluator: TerminalFn
    tag: str
    params: dict = field(default_factory=dict, compare=False)

    def __call__(self, t: float, terminal_state: np.ndarray) -> np.ndarray:
        return _broadcast(self.evaluator(t, terminal_state), terminal_state.shape[0]).astype(np.float64)

    def describe(self) -> dict:
        return {"tag": self.tag, **self.params}

    @classmethod
    def constant(cls, c: float) -> "TerminalSpec":
        c = float(c)
        return cls(evaluator=lambda t, w: c, tag="constant", params={"c": c})

    @classmethod
    def linear_terminal(cls, a: Union[float, Sequence[float]] = 1.0, b: float = 0.0) -> "TerminalSpec":
        a_vec = np.atleast_1d(np.asarray(a, dtype=np.float64))
        b = float(b)
        return cls(
            evaluator=lambda t, w: w @ np.broadcast_to(a_vec, (w.shape[1],)) + b,
            tag="linear",
            params={"a": a_vec.tolist(), "b": b},
        )

    @classmethod
    def call_on_w(cls, strike: float) -> "TerminalSpec":
        strike = float(strike)
        return cls(evaluator=lambda t, w: np.maximum(w[:, 0] - strike, 0.0),
                   tag="call", params={"K": strike})

    @classmethod
    def put_on_w(cls, strike: float) -> "TerminalSpec":
        strike = float(strike)
        return cls(evaluator=lambda t, w: np.maximum(strike - w[:, 0], 0.0),
                   tag="put", params={"K": strike})

    @classmethod
    def switch(cls, at: float, early: "TerminalSpec", late: "TerminalSpec") -> "TerminalSpec":
        """early(t) for t < at, late(t) for t >= at"""
        at = float(at)

        def evaluate(t, w):
            return early(t, w) if t < at else late(t, w)

        return cls(evaluator=evaluate, tag="switch",
                   params={"at": at, "early": early.describe(), "late": late.describe()})

    def plus(self, other: "TerminalSpec") -> "TerminalSpec":
        return TerminalSpec(evaluator=lambda t, w: self(t, w) + other(t, w), tag="sum",
                            params={"terms": [self.describe(), other.describe()]})

    def shifted(self, c: float) -> "TerminalSpec":
        c = float(c)
        return TerminalSpec(evaluator=lambda t, w: self(t, w) + c, tag="shifted",
                            params={"base": self.describe(), "c": c})

    def scaled(self, factor: float) -> "TerminalSpec":
        factor = float(factor)
        return TerminalSpec(evaluator=lambda t, w: factor * self(t, w), tag="scaled",
                            params={"base": self.describe(), "factor": factor})

    def negated(self) -> "TerminalSpec":
        return TerminalSpec(evaluator=lambda t, w: -self(t, w), tag="negated",
                            params={"base": self.describe()})
