"""
Annulus-norm, decay-fit and uniqueness-experiment models.
"""

from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from semzk.models.base import ReportBase, Verdict
from semzk.models.grid import Grid2D
from semzk.models.initial_data import GaussianData, InitialData, PerturbedData
from semzk.utils.error_handlers import ValidationError

# Radius factor between the annulus and the decay exponent in the upper-bound convention.
UPPER_RADIUS_FACTOR = 28.0


class Window(str, Enum):
    """Time window of an annulus profile."""
    INTERVAL = "interval"
    INITIAL = "initial"
    FINAL = "final"


class RadiusConvention(str, Enum):
    """Whether the fitted exponent uses the annulus radius R or R / 28."""
    AT_R = "R"
    AT_28R = "28R"


class AnnulusReport(ReportBase):
    kind: str = "annulus_report"
    grid: str = Field(..., description="Grid identifier")
    trajectory: str = Field("", description="Trajectory identifier")
    radii: List[float]
    a_values: List[float] = Field(..., description="A_R over the snapshot time interval")
    a_initial: List[float] = Field(..., description="A_R of the first snapshot alone")
    a_final: List[float] = Field(..., description="A_R of the last snapshot alone")

    def values(self, window: Window) -> List[float]:
        window = Window(window)
        if window == Window.INITIAL:
            return self.a_initial
        if window == Window.FINAL:
            return self.a_final
        return self.a_values


class DecayFit(BaseModel):
    """A_R ~ c0 exp(-c1 rho^{3/2}) with rho = R or R / 28."""
    c0_fit: float = Field(..., gt=0)
    c1_fit: float
    residual: float = Field(..., description="RMS residual of the fit in log space")
    radii_used: List[float]
    window: Window = Window.INTERVAL
    convention: RadiusConvention = RadiusConvention.AT_R


class PowerFit(BaseModel):
    """A_R ~ c0 exp(-c1 R^gamma) with gamma free."""
    c0_fit: float
    c1_fit: float
    gamma: float
    residual: float
    radii_used: List[float]


class ExperimentConfig(BaseModel):
    """Two SEM runs contrasted through the annulus norm of their difference."""
    model_config = ConfigDict(extra="forbid")

    grid: Grid2D = Field(default_factory=lambda: Grid2D(nx=192, ny=192, lx=96.0, ly=96.0))
    u1: InitialData = Field(default_factory=GaussianData)
    u2: InitialData = Field(default_factory=PerturbedData)
    dt: float = Field(0.01, gt=0)
    t_end: float = Field(1.0, gt=0)
    snapshot_every: int = Field(1, ge=1)
    dealias: bool = True
    radii: List[float] = Field(default_factory=lambda: [float(r) for r in range(2, 25, 2)])
    probe_a: float = Field(0.1, gt=0, description="Exponent of the endpoint weights e^{a r^{3/2}/2}")
    time_margin: float = Field(0.25, gt=0, lt=0.5, description="Core window [r, 1 - r] in units of t_end")
    seed: Optional[int] = None

    @field_validator("radii")
    @classmethod
    def _ascending(cls, v: List[float]) -> List[float]:
        if not v or any(b <= a for a, b in zip(v, v[1:])):
            raise ValidationError("radii must be a non-empty strictly increasing list")
        return v


class EndpointWeightedNorms(BaseModel):
    probe_a: float
    initial: float
    final: float


class BoundaryCertificate(BaseModel):
    """Largest magnitudes over the outer band of cells across all snapshots."""
    band: int
    u1_max: float
    u2_max: float
    v_max: float


class UniquenessReport(ReportBase):
    kind: str = "uniqueness_experiment"
    grid: Grid2D
    dt: float
    t_end: float
    verdict: Verdict
    max_abs_v: float
    profile: AnnulusReport
    fits: Dict[str, Optional[DecayFit]]
    power_fit: Optional[PowerFit] = None
    a0_form: Optional[float] = Field(None, description="16 * 28**1.5 * c1 of the interval fit")
    core_mass: float = Field(..., description="||v|| over {r <= 1} x [margin, 1 - margin]")
    endpoint_weighted_norms: EndpointWeightedNorms
    boundary_certificate: BoundaryCertificate
