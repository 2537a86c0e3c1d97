"""
Models for the Carleman weight, cutoffs, test functions and inequality reports.
"""

from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from semzk.models.base import ReportBase
from semzk.utils.error_handlers import AdmissibilityError, ValidationError

# Relative slack on the admissibility comparison alpha >= cbar * R**1.5.
ADMISSIBILITY_RTOL = 1e-12


class CarlemanParams(BaseModel):
    """Weight strength, radius and time margin of the Carleman weight."""
    model_config = ConfigDict(frozen=True)

    R: float = Field(..., description="Radius parameter (> 1)")
    alpha: float = Field(..., description="Weight strength")
    r: float = Field(0.25, description="Time margin of the profile, in (0, 1/2)")
    cbar: float = Field(..., description="max(|phi'|_inf, |phi''|_inf, 1) of the time profile")

    @field_validator("R")
    @classmethod
    def _radius(cls, v: float) -> float:
        if not v > 1:
            raise ValidationError(f"R must exceed 1, got {v}")
        return float(v)

    @field_validator("r")
    @classmethod
    def _margin(cls, v: float) -> float:
        if not 0 < v < 0.5:
            raise ValidationError(f"r must lie in (0, 1/2), got {v}")
        return float(v)

    @model_validator(mode="after")
    def _admissible(self) -> "CarlemanParams":
        threshold = self.cbar * self.R ** 1.5
        if self.alpha < threshold * (1 - ADMISSIBILITY_RTOL):
            raise AdmissibilityError(
                "alpha below admissibility",
                details={"alpha": self.alpha, "threshold": threshold, "R": self.R, "cbar": self.cbar},
            )
        return self

    @property
    def threshold(self) -> float:
        return self.cbar * self.R ** 1.5

    @classmethod
    def admissible(cls, R: float, r: float = 0.25, factor: float = 1.0) -> "CarlemanParams":
        """Parameters with alpha = factor * cbar * R**1.5 for the profile of margin r."""
        from semzk.services.carleman import profile_cbar

        cbar = profile_cbar(r)
        return cls(R=R, alpha=factor * cbar * R ** 1.5, r=r, cbar=cbar)


class TimeProfile(BaseModel):
    """Time profile: 0 near both ends of [0, 1], 4 on [r, 1 - r]."""
    model_config = ConfigDict(frozen=True)

    r: float = Field(0.25, gt=0, lt=0.5)

    def values(self, t):
        """(phi, phi', phi'') at t."""
        from semzk.services.carleman import time_profile

        return time_profile(self.r, t)

    @property
    def cbar(self) -> float:
        from semzk.services.carleman import profile_cbar

        return profile_cbar(self.r)


class ProfileKind(str, Enum):
    """1D factors of a separable test function."""
    BUMP = "bump"
    GAUSSIAN = "gaussian"
    TRUNCATED_GAUSSIAN = "truncated_gaussian"


COMPACT_PROFILES = (ProfileKind.BUMP, ProfileKind.TRUNCATED_GAUSSIAN)


class TestFunction(BaseModel):
    """Separable space-time function ``A * X((x-x0)/wx) * Y((y-y0)/wy) * T((t-t0)/wt)``."""
    model_config = ConfigDict(frozen=True)
    __test__ = False

    x0: float = 0.0
    y0: float = 0.0
    t0: float = 0.5
    wx: float = Field(1.0, gt=0)
    wy: float = Field(1.0, gt=0)
    wt: float = Field(0.25, gt=0)
    amplitude: float = 1.0
    x_profile: ProfileKind = ProfileKind.BUMP
    y_profile: ProfileKind = ProfileKind.BUMP
    t_profile: ProfileKind = ProfileKind.BUMP
    sharpness: float = Field(4.0, gt=0, description="Gaussian factor exp(-sharpness * s**2)")
    family: str = Field("custom", description="Sampler family that produced the function")

    @property
    def spatially_compact(self) -> bool:
        return self.x_profile in COMPACT_PROFILES and self.y_profile in COMPACT_PROFILES

    @property
    def time_compact(self) -> bool:
        return self.t_profile in COMPACT_PROFILES

    def support_box(self) -> Tuple[Tuple[float, float], Tuple[float, float], Tuple[float, float]]:
        """(x-range, y-range, t-range) of the support; gaussian factors use 6 widths."""
        def span(c: float, w: float, kind: ProfileKind) -> Tuple[float, float]:
            half = w if kind in COMPACT_PROFILES else 6.0 * w / self.sharpness ** 0.5
            return (c - half, c + half)
        return (
            span(self.x0, self.wx, self.x_profile),
            span(self.y0, self.wy, self.y_profile),
            span(self.t0, self.wt, self.t_profile),
        )


class CutoffSet(BaseModel):
    """Cutoff parameters; theta, mu and phi_RN are evaluated by the carleman service."""
    model_config = ConfigDict(frozen=True)

    R: float = Field(..., gt=1)
    N: Optional[float] = Field(None, description="Outer radius of phi_RN")
    r: float = Field(0.25, gt=0, lt=0.5)


class LowerOrderTerms(BaseModel):
    """Constant bounded coefficients a1, b1, c0 of the lower-order part."""
    model_config = ConfigDict(frozen=True)

    a1: float = 0.0
    b1: float = 0.0
    c0: float = 0.0


class Representation(str, Enum):
    CONJUGATED = "conjugated"
    DIRECT = "direct"


class CarlemanSample(BaseModel):
    index: int
    lhs: float
    rhs: float
    ratio: float
    scaled_ratio: float = Field(..., description="sqrt(alpha) * ratio")
    test_function: TestFunction


class CarlemanReport(ReportBase):
    kind: str = "carleman_check"
    params: CarlemanParams
    representation: Representation
    samples: List[CarlemanSample]
    max_ratio: float = Field(..., description="Largest raw lhs/rhs")
    max_scaled_ratio: float = Field(..., description="Largest sqrt(alpha) * lhs/rhs")


class RadiusPeak(BaseModel):
    R: float
    alpha: float
    max_ratio: float
    max_scaled_ratio: float


class CarlemanRadiusReport(ReportBase):
    """Peak Carleman ratios over several radii at admissible alpha."""
    kind: str = "carleman_radii"
    peaks: List[RadiusPeak]
    factor: float = Field(..., description="Allowed spread")
    raw_spread: float = Field(..., description="max / min of the raw peaks")
    scaled_spread: float = Field(..., description="max / min of the sqrt(alpha)-scaled peaks")
    bounded: bool = Field(..., description="Every raw peak is within factor of the peak at the smallest radius")
    raw_stable: bool
    scaled_stable: bool


class CommutatorSample(BaseModel):
    index: int
    quadratic_form: float
    lower_bound: float
    margin: float = Field(..., description="(quadratic_form - lower_bound) / |quadratic_form|")
    holds: bool
    upper_consistency: bool = Field(..., description="quadratic_form <= ||(S + A) f||**2")
    completion_residuals: Dict[str, float]
    test_function: TestFunction


class WeightRegionBounds(BaseModel):
    interior_max_phi: float
    interior_limit: float = 25.0
    transition_max_phi: float
    transition_limit: float = 10.0
    interior_samples: int
    transition_samples: int

    @property
    def holds(self) -> bool:
        return self.interior_max_phi <= self.interior_limit and self.transition_max_phi <= self.transition_limit


class CommutatorReport(ReportBase):
    kind: str = "commutator_check"
    params: CarlemanParams
    samples: List[CommutatorSample]
    all_hold: bool
    region_bounds: WeightRegionBounds


class SecondPersistenceData(BaseModel):
    """Data terms of the estimate valid for beta >= 1, lambda >= 7 beta."""
    lhs_quadrature: float = Field(..., description="L2(D) norms of the weighted function and its derivatives up to order 2")
    j3_initial: float
    j3_final: float
    operator_term: float


class PersistenceResult(BaseModel):
    lam: float
    beta: float
    lhs: float
    rhs: float
    ratio: float
    holds: bool = Field(..., description="lhs <= rhs")
    sigma: float = Field(..., description="Smoothing length of |x| and |y|")
    second_estimate: Optional[SecondPersistenceData] = None


class PersistenceReport(ReportBase):
    kind: str = "persistence_check"
    results: List[PersistenceResult]
    all_hold: bool = Field(..., description="lhs <= rhs for every pair")
    slack: float = Field(..., description="Relative discretisation slack")
    all_hold_within_slack: bool = Field(..., description="lhs <= (1 + slack) rhs for every pair")


class InterpolationResult(BaseModel):
    theta: float
    beta: float
    k: int
    lhs: float
    rhs_product: float
    ratio: float
    label: str = ""


class InterpolationReport(ReportBase):
    kind: str = "interpolation_check"
    grid: str
    results: List[InterpolationResult]
    max_interior_ratio: float
