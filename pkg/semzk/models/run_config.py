"""
Run configuration read from ``--config``.

Every level forbids unknown keys; each subcommand reads its own optional section.
"""

from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from semzk.models.carleman import LowerOrderTerms, Representation, TestFunction
from semzk.models.grid import Grid2D, MultiplierKind
from semzk.models.initial_data import GaussianData, InitialData
from semzk.models.riesz import SEARCH_KINDS
from semzk.models.solver import ModelKind
from semzk.models.uniqueness import ExperimentConfig, RadiusConvention
from semzk.utils.error_handlers import ValidationError


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ToleranceOverrides(_Section):
    """Overrides applied to the global settings for the duration of a run."""
    exponent_cap: Optional[float] = Field(None, gt=0, le=709.0)
    decay_floor: Optional[float] = Field(None, gt=0)
    boundary_band: Optional[int] = Field(None, ge=1)
    ap_epsilon: Optional[float] = Field(None, gt=0)
    ap_delta: Optional[float] = Field(None, gt=0)
    norm_slack: Optional[float] = Field(None, ge=0)
    conservation_tolerance: Optional[float] = Field(None, gt=0)
    hamiltonian_tolerance: Optional[float] = Field(None, gt=0)
    commutator_tolerance: Optional[float] = Field(None, gt=0)
    fft_workers: Optional[int] = Field(None, ge=1)

    def overrides(self) -> dict:
        return self.model_dump(exclude_none=True)


class RieszSection(_Section):
    kind: MultiplierKind = MultiplierKind.RIESZ_X
    p: float = Field(2.0, gt=1)
    budget: int = Field(64, ge=1)
    fields: int = Field(8, ge=1, description="Random fields for the identity and non-local checks")
    workers: int = Field(1, ge=1)

    @field_validator("kind")
    @classmethod
    def _searchable(cls, v: MultiplierKind) -> MultiplierKind:
        if v not in SEARCH_KINDS:
            raise ValidationError(f"norm search does not support {v.value}")
        return v


class ApSection(_Section):
    p: float = Field(2.0, gt=1)
    R: float = Field(16.0, gt=1)
    alpha: Optional[float] = Field(None, gt=0, description="Weight exponent; defaults to R**1.5")
    r: float = Field(0.25, gt=0, lt=0.5)
    t: float = Field(0.5, ge=0, le=1)
    stride: int = Field(4, ge=1)
    refine: bool = True
    fields: int = Field(16, ge=0, description="Band-limited fields for the weighted bound; 0 skips it")
    budget: int = Field(32, ge=1, description="Weighted search budget")
    operator: MultiplierKind = MultiplierKind.NONLOCAL_X
    workers: int = Field(1, ge=1)

    @field_validator("operator")
    @classmethod
    def _searchable(cls, v: MultiplierKind) -> MultiplierKind:
        if v not in SEARCH_KINDS:
            raise ValidationError(f"weighted bound operator must be a Riesz or non-local kind, got {v.value}")
        return v


class CarlemanSection(_Section):
    R: float = Field(8.0, gt=1)
    alpha: Optional[float] = Field(None, description="Defaults to factor * cbar * R**1.5")
    factor: float = Field(1.0, gt=0)
    r: float = Field(0.25, gt=0, lt=0.5)
    count: int = Field(100, ge=1)
    representation: Representation = Representation.CONJUGATED
    lower_order: Optional[LowerOrderTerms] = None
    workers: int = Field(1, ge=1)


class CommutatorSection(_Section):
    R: float = Field(8.0, gt=1)
    alpha: Optional[float] = None
    factor: float = Field(1.0, gt=0)
    r: float = Field(0.25, gt=0, lt=0.5)
    count: int = Field(20, ge=1)
    workers: int = Field(1, ge=1)


class PersistenceSection(_Section):
    function: TestFunction = Field(default_factory=lambda: TestFunction(x0=3.0, y0=3.0))
    pairs: List[Tuple[float, float]] = Field(
        default_factory=lambda: [(1.0, 1.0), (7.0, 1.0), (2.0, 0.5)],
        description="(lambda, beta) pairs",
    )
    sigma: Optional[float] = Field(None, gt=0)


class InterpolationSection(_Section):
    thetas: List[float] = Field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])
    beta: float = Field(0.5, gt=0)
    k: int = Field(2, ge=1, le=4)

    @field_validator("thetas")
    @classmethod
    def _unit_interval(cls, v: List[float]) -> List[float]:
        if not v or any(not 0.0 <= th <= 1.0 for th in v):
            raise ValidationError("thetas must be a non-empty list in [0, 1]")
        return v


class AnnulusSection(_Section):
    """Annulus profile of a trajectory stored as snapshot files, in time order."""
    snapshots: List[str] = Field(..., min_length=2)
    radii: List[float] = Field(default_factory=lambda: [float(r) for r in range(2, 25, 2)])
    convention: RadiusConvention = RadiusConvention.AT_R
    fit: bool = True


class RunConfig(_Section):
    """One CLI invocation."""
    model: ModelKind = ModelKind.ZK
    grid: Grid2D = Field(default_factory=lambda: Grid2D(nx=64, ny=64, lx=40.0, ly=40.0))
    dt: Optional[float] = Field(None, gt=0)
    t_end: float = Field(1.0, ge=0)
    snapshot_every: int = Field(1, ge=1)
    dealias: bool = True
    strict: bool = False
    allow_large_dt: bool = False
    initial_data: InitialData = Field(default_factory=GaussianData)
    seed: int = Field(0, ge=0)
    out: Optional[str] = Field(None, description="Output directory; --out takes precedence")
    tolerances: ToleranceOverrides = Field(default_factory=ToleranceOverrides)

    riesz: Optional[RieszSection] = None
    ap: Optional[ApSection] = None
    carleman: Optional[CarlemanSection] = None
    commutator: Optional[CommutatorSection] = None
    persistence: Optional[PersistenceSection] = None
    interpolation: Optional[InterpolationSection] = None
    annulus: Optional[AnnulusSection] = None
    uniqueness: Optional[ExperimentConfig] = None
