"""
Validated run configuration.

Every block forbids unknown keys so misspellings fail loudly.
"""

from typing import Annotated, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridConfig(StrictModel):
    dim: int = 1
    extents: List[Tuple[float, float]] = [(0.0, 1.0)]
    counts: List[int] = [255]

    @model_validator(mode="after")
    def check_shape(self) -> "GridConfig":
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if len(self.extents) != self.dim or len(self.counts) != self.dim:
            raise ValueError("extents and counts must have one entry per dimension")
        for n in self.counts:
            if n < 3:
                raise ValueError(f"every count must be >= 3, got {n}")
        for a, b in self.extents:
            if not b > a:
                raise ValueError(f"every extent needs b > a, got ({a}, {b})")
        return self


class Section5Config(StrictModel):
    kind: Literal["section5"]
    theta: float
    eta: float


class RationalConfig(StrictModel):
    kind: Literal["rational"]
    alpha: float = 0.0
    eta: float


class CoerciveConfig(StrictModel):
    kind: Literal["coercive"]
    alpha: float
    eta: float


class LinearConfig(StrictModel):
    kind: Literal["linear"]
    eta: float


class ExprConfig(StrictModel):
    kind: Literal["expr"]
    f: str
    F: Optional[str] = None
    alpha: Optional[float] = None
    eta: Optional[float] = None
    odd: Optional[bool] = None


ModelConfig = Annotated[
    Union[Section5Config, RationalConfig, CoerciveConfig, LinearConfig, ExprConfig],
    Field(discriminator="kind"),
]


class SpectrumConfig(StrictModel):
    m: int = Field(5, ge=1)
    cluster_tol: float = Field(1e-6, gt=0)
    dense_limit: int = Field(3000, ge=1)


class HypothesesConfig(StrictModel):
    t_min: float = Field(1e-6, gt=0)
    t_max: float = Field(1e6, gt=0)
    lattice_size: int = Field(64, ge=4)
    sample_nodes: int = Field(16, ge=1)
    m: int = Field(1, ge=1)


class SolveConfig(StrictModel):
    tol: float = Field(1e-8, gt=0)
    fiber_tol: float = Field(1e-12, gt=0)
    max_iter: int = Field(5000, ge=1)
    restarts: int = Field(1, ge=1)
    seed: int = 0
    delta_min: float = Field(1e-10, ge=0)
    initial_step: float = Field(1.0, gt=0)
    shrink: float = Field(0.5, gt=0, lt=1)
    armijo: float = Field(1e-4, gt=0, lt=1)
    perturbation: float = Field(0.1, ge=0)
    escape_ratio: float = Field(1e-6, gt=0)
    escape_window: int = Field(20, ge=2)
    tau_restarts: int = Field(4, ge=0)
    scan_amplitude: float = Field(1.0, gt=0)


class VerifyConfig(StrictModel):
    sobolev: Optional[Union[float, Literal["discrete"]]] = "discrete"
    beta_ladder: List[float] = [1e3, 1e4, 1e5, 1e6]
    beta_cap: float = Field(1e8, gt=0)
    m: int = Field(1, ge=1)

    @field_validator("beta_ladder")
    @classmethod
    def check_ladder(cls, ladder: List[float]) -> List[float]:
        if len(ladder) < 3:
            raise ValueError("beta_ladder needs at least 3 entries")
        if any(b <= a for a, b in zip(ladder, ladder[1:])) or ladder[0] <= 0:
            raise ValueError("beta_ladder must be positive and strictly ascending")
        if ladder[-1] < 1e3:
            raise ValueError("beta_ladder must end at or above 1e3")
        return ladder

    @field_validator("sobolev")
    @classmethod
    def check_sobolev(cls, value):
        if isinstance(value, float) and not value > 0:
            raise ValueError("a user-supplied Sobolev constant must be positive")
        return value


class LoggingConfig(StrictModel):
    level: Literal["debug", "info", "warning", "error", "critical"] = "warning"


class RunConfig(StrictModel):
    grid: GridConfig = GridConfig()
    model: ModelConfig = Section5Config(kind="section5", theta=12.0, eta=1000.0)
    spectrum: SpectrumConfig = SpectrumConfig()
    hypotheses: HypothesesConfig = HypothesesConfig()
    solve: SolveConfig = SolveConfig()
    verify: VerifyConfig = VerifyConfig()
    logging: LoggingConfig = LoggingConfig()
