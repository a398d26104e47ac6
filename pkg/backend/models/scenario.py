"""
Scenario configuration schemas
One JSON document per run, validated before any computation starts
"""

from math import comb
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, model_validator
from typing_extensions import Annotated

from config.settings import settings
from services.exceptions import ConfigError


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)


# Coefficients l1 / r1

class TimeTableCoefficient(_Block):
    kind: Literal["time_table"]
    times: List[float] = Field(min_length=2)
    values: List[float] = Field(min_length=2)

    @model_validator(mode="after")
    def _check_table(self):
        if len(self.times) != len(self.values):
            raise ValueError("times and values must have the same length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        return self


class GridTableCoefficient(_Block):
    """l(t_i, t_j) on the scenario grid, (N+1) x (N+1)"""

    kind: Literal["grid_table"]
    values: List[List[float]]


class SinWCoefficient(_Block):
    kind: Literal["sin_w"]
    scale: float = 1.0
    shift: float = 0.0


TableCoefficient = Annotated[
    Union[TimeTableCoefficient, GridTableCoefficient, SinWCoefficient],
    Field(discriminator="kind"),
]
CoefficientBlock = Union[float, TableCoefficient]


# Generators

class ZeroGenerator(_Block):
    tag: Literal["zero"]


class LinearGenerator(_Block):
    """g = l1 y + l2 . z"""

    tag: Literal["linear"]
    l1: CoefficientBlock = 0.0
    l2: Union[float, List[float]] = 0.0


class KappaAbsZGenerator(_Block):
    """g = r1 y + kappa |z| with deterministic r1"""

    tag: Literal["kappa_abs_z"]
    kappa: float
    r1: CoefficientBlock = 0.0

    @model_validator(mode="after")
    def _deterministic_r1(self):
        if isinstance(self.r1, SinWCoefficient):
            raise ValueError("r1 must be deterministic for the kappa_abs_z generator")
        return self


class QuadraticGenerator(_Block):
    tag: Literal["quadratic"]
    scale: float = 1.0


GeneratorBlock = Annotated[
    Union[ZeroGenerator, LinearGenerator, KappaAbsZGenerator, QuadraticGenerator],
    Field(discriminator="tag"),
]


# Terminal claims

class ConstantTerminal(_Block):
    tag: Literal["constant"]
    c: float


class LinearTerminal(_Block):
    """a . W(T) + b"""

    tag: Literal["linear"]
    a: Union[float, List[float]] = 1.0
    b: float = 0.0


class CallTerminal(_Block):
    tag: Literal["call"]
    K: float


class PutTerminal(_Block):
    tag: Literal["put"]
    K: float


class SwitchTerminal(_Block):
    """early for t < at, late from at on"""

    tag: Literal["switch"]
    at: PositiveFloat
    early: "TerminalBlock"
    late: "TerminalBlock"


class SumTerminal(_Block):
    tag: Literal["sum"]
    terms: List["TerminalBlock"] = Field(min_length=1)


TerminalBlock = Annotated[
    Union[ConstantTerminal, LinearTerminal, CallTerminal, PutTerminal, SwitchTerminal, SumTerminal],
    Field(discriminator="tag"),
]

SwitchTerminal.model_rebuild()
SumTerminal.model_rebuild()


def _linear_terminals(block, path: str):
    """(path, LinearTerminal) for every linear claim nested in block"""
    if isinstance(block, LinearTerminal):
        yield path, block
    elif isinstance(block, SwitchTerminal):
        yield from _linear_terminals(block.early, f"{path}.early")
        yield from _linear_terminals(block.late, f"{path}.late")
    elif isinstance(block, SumTerminal):
        for k, term in enumerate(block.terms):
            yield from _linear_terminals(term, f"{path}.terms.{k}")


# Command blocks

class SolverBlock(_Block):
    beta: Optional[PositiveFloat] = None
    tol: PositiveFloat = settings.default_tol
    max_iter: int = Field(default=settings.default_max_iter, ge=1)
    degree: int = Field(default=settings.default_degree, ge=0)
    ridge: float = Field(default=settings.default_ridge, ge=0)
    initial: Literal["zero", "terminal"] = "zero"
    divergence_window: int = Field(default=settings.divergence_window, ge=1)
    h1_samples: int = Field(default=0, ge=0)


AxiomName = Literal["past_independence", "monotonicity", "positive_homogeneity", "subadditivity", "translation"]


class AxiomBatteryBlock(_Block):
    axioms: List[AxiomName] = Field(
        default_factory=lambda: [
            "past_independence", "monotonicity", "positive_homogeneity", "subadditivity", "translation",
        ],
        min_length=1,
    )
    switch_time: PositiveFloat = 0.5
    homogeneity_factors: List[PositiveFloat] = Field(default_factory=lambda: [2.0], min_length=1)
    translation_constants: List[float] = Field(default_factory=lambda: [1.0], min_length=1)
    translation_alt: Optional[TerminalBlock] = None
    monotone_pairs: Optional[List[Tuple[TerminalBlock, TerminalBlock]]] = None
    subadditive_pairs: Optional[List[Tuple[TerminalBlock, TerminalBlock]]] = None


class ConstantKernel(_Block):
    tag: Literal["constant"]
    r: float


class TimeOnlyKernel(_Block):
    """l'(t, s) = r(s), r interpolated from the table"""

    tag: Literal["time_only"]
    times: List[float] = Field(min_length=2)
    values: List[float] = Field(min_length=2)

    @model_validator(mode="after")
    def _check_table(self):
        if len(self.times) != len(self.values):
            raise ValueError("times and values must have the same length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        return self


class GridTableKernel(_Block):
    tag: Literal["grid_table"]
    values: List[List[float]]


KernelBlock = Annotated[
    Union[ConstantKernel, TimeOnlyKernel, GridTableKernel],
    Field(discriminator="tag"),
]


class BVIEBlock(_Block):
    kernel: KernelBlock
    c: float
    tol: PositiveFloat = settings.bvie_tol
    max_iter: int = Field(default=settings.bvie_max_iter, ge=1)


class CounterexampleBlock(_Block):
    c: float
    mean_field: bool = False


class ConvergenceBlock(_Block):
    kind: Literal["solve", "risk", "bvie"] = "solve"
    steps_ladder: List[Annotated[int, Field(ge=2)]] = Field(min_length=2)
    paths_ladder: Optional[List[Annotated[int, Field(ge=1)]]] = Field(default=None, min_length=1)


class ScenarioConfig(_Block):
    horizon: PositiveFloat = 1.0
    steps: int = Field(default=32, ge=2)
    paths: int = Field(default=20000, ge=1)
    brownian_dim: int = Field(default=1, ge=1)
    seed: int = Field(default=42, ge=0)

    generator: Optional[GeneratorBlock] = None
    terminal: Optional[TerminalBlock] = None
    solver: SolverBlock = Field(default_factory=SolverBlock)

    axioms: Optional[AxiomBatteryBlock] = None
    bvie: Optional[BVIEBlock] = None
    counterexample: Optional[CounterexampleBlock] = None
    convergence: Optional[ConvergenceBlock] = None

    @model_validator(mode="after")
    def _check_against_grid(self):
        size = self.steps + 1
        tables = []
        if isinstance(self.generator, LinearGenerator):
            tables.append(("generator.l1", self.generator.l1))
        if isinstance(self.generator, KappaAbsZGenerator):
            tables.append(("generator.r1", self.generator.r1))
        if self.bvie is not None:
            tables.append(("bvie.kernel", self.bvie.kernel))
        for name, table in tables:
            if isinstance(table, (GridTableCoefficient, GridTableKernel)):
                if len(table.values) != size or any(len(row) != size for row in table.values):
                    raise ValueError(f"{name}.values must be a {size} x {size} table for steps={self.steps}")

        basis_size = comb(self.brownian_dim + self.solver.degree, self.solver.degree)
        if basis_size * 10 >= self.paths:
            raise ValueError(
                f"paths={self.paths} is too small for a degree-{self.solver.degree} basis "
                f"of size {basis_size} (needs paths > {basis_size * 10})"
            )
        if self.axioms is not None and self.axioms.switch_time >= self.horizon:
            raise ValueError("axioms.switch_time must lie inside (0, horizon)")

        vectors = []
        if isinstance(self.generator, LinearGenerator):
            vectors.append(("generator.l2", self.generator.l2))
        for name, claim in self._terminal_blocks():
            vectors.extend((f"{path}.a", block.a) for path, block in _linear_terminals(claim, name))
        for name, vector in vectors:
            if isinstance(vector, list) and len(vector) not in (1, self.brownian_dim):
                raise ValueError(
                    f"{name} has {len(vector)} entries; use 1 or brownian_dim={self.brownian_dim}"
                )
        return self

    def _terminal_blocks(self):
        if self.terminal is not None:
            yield "terminal", self.terminal
        if self.axioms is None:
            return
        if self.axioms.translation_alt is not None:
            yield "axioms.translation_alt", self.axioms.translation_alt
        for field_name in ("monotone_pairs", "subadditive_pairs"):
            for k, pair in enumerate(getattr(self.axioms, field_name) or []):
                for side, claim in enumerate(pair):
                    yield f"axioms.{field_name}.{k}.{side}", claim

    def require(self, *blocks: str) -> None:
        """Raise ConfigError unless every named block is present"""
        missing = [name for name in blocks if getattr(self, name) is None]
        if missing:
            raise ConfigError(f"Config is missing required block(s): {', '.join(missing)}")
