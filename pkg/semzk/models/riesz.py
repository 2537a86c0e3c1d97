"""
Models for Riesz-transform norm searches and A_p weight constants.
"""

from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from semzk.models.base import ReportBase
from semzk.models.grid import Grid2D, MultiplierKind
from semzk.utils.error_handlers import ValidationError

SEARCH_KINDS = (
    MultiplierKind.RIESZ_X,
    MultiplierKind.RIESZ_Y,
    MultiplierKind.NONLOCAL_X,
    MultiplierKind.NONLOCAL_Y,
)


class Axis(str, Enum):
    X = "x"
    Y = "y"


class BoundKind(str, Enum):
    """How the reference constant of a norm search was obtained."""
    SHARP = "sharp"
    COMPOSITION = "composition"


class BallFamily(BaseModel):
    """Balls centred on a strided sub-lattice of grid points with a geometric radius ladder."""
    model_config = ConfigDict(frozen=True)

    stride: int = Field(..., ge=1, description="Centre spacing in grid cells")
    level: int = Field(0, ge=0, description="Refinement level; radii ratio is 2**(1/2**level)")
    base_radius: float = Field(..., gt=0, description="Smallest radius")
    max_radius: float = Field(..., gt=0, description="Largest radius")

    @property
    def radii(self) -> List[float]:
        ratio = 2.0 ** (1.0 / 2 ** self.level)
        radii = []
        r = self.base_radius
        while r <= self.max_radius * (1 + 1e-12):
            radii.append(r)
            r *= ratio
        return radii

    def refine(self) -> "BallFamily":
        """Half the centre spacing and twice the radius density."""
        return self.model_copy(update={"stride": max(1, self.stride // 2), "level": self.level + 1})


def dyadic_balls(grid: Grid2D, stride: int = 4, level: int = 0, max_radius: Optional[float] = None) -> BallFamily:
    """Dyadic family: radii dx*2**k capped at L/4."""
    cap = max_radius if max_radius is not None else min(grid.lx, grid.ly) / 4.0
    return BallFamily(stride=stride, level=level, base_radius=min(grid.dx, grid.dy), max_radius=cap)


class ApEstimate(BaseModel):
    """Estimated A_p constant of a weight over a ball family."""
    p: float = Field(..., description="Exponent in (1, inf)")
    q_value: float = Field(..., description="Estimated Q_p(w); inf when beyond double range")
    log_q_value: float = Field(..., description="Natural log of Q_p(w)")
    ball_count: int = Field(..., description="Balls evaluated")
    skipped_balls: int = Field(0, description="Balls skipped for holding fewer than 4 grid points")
    max_ball: Tuple[Tuple[float, float], float] = Field(..., description="(centre, radius) attaining the supremum")

    @field_validator("log_q_value")
    @classmethod
    def _at_least_one(cls, v: float) -> float:
        if v < 0:
            raise ValidationError(f"Q_p below one (log {v})")
        return v


class NormEstimate(BaseModel):
    """Lower bound on an operator norm from a candidate search."""
    kind: MultiplierKind
    p: float
    lower_bound: float = Field(..., ge=0, description="Best ratio found")
    sharp_value: float = Field(..., description="Reference constant")
    bound_kind: BoundKind
    slack: float = Field(..., description="Discretisation slack of the comparison")
    sample_count: int
    weighted: bool = False
    weighted_reference: Optional[float] = Field(None, description="Q_p(w)**r, r doubled for non-local kinds")
    best_candidate: str = Field(..., description="Family of the best candidate")

    @property
    def within_bound(self) -> bool:
        return self.lower_bound <= self.sharp_value * (1.0 + self.slack)


class WeightedRatio(BaseModel):
    """Weighted L2 ratio ||T f||_w / ||f||_w for one test field."""
    label: str
    ratio: float
    log_ratio: float


class WeightedBoundReport(ReportBase):
    """Weighted L2 ratios on generic band-limited fields against Q_2(w)**r (Q**2r for compositions)."""
    kind: str = "weighted_bound"
    operator: MultiplierKind
    p: float = 2.0
    ratios: List[WeightedRatio]
    search: Optional[NormEstimate] = Field(None, description="Weighted ascent from the sampled fields")
    max_ratio: float = Field(..., description="Largest ratio over the fields and the ascent")
    log_q_value: float = Field(..., description="log Q_p(w) the reference is built from")
    exponent: float = Field(..., description="Power of Q_p(w) in the reference")
    log_reference: float
    reference: float = Field(..., description="Q_p(w)**exponent; inf when beyond double range")
    slack: float
    tolerance: float
    within_reference: bool
    constant_one: bool = Field(..., description="Whether every ratio is <= 1 + tolerance; reported, not required")
    holds: bool


class RieszReport(ReportBase):
    kind: str = "riesz_check"
    grid: Grid2D
    identity_error: float = Field(..., description="max |Rx^2 f + Ry^2 f + (f - mean f)| on a Nyquist-free field")
    nonlocal_max_ratio: float = Field(..., description="Largest L2 ratio of the x non-local operator")
    estimate: NormEstimate


class ApReport(ReportBase):
    kind: str = "ap_check"
    grid: Grid2D
    estimate: ApEstimate
    R: float
    alpha: float = Field(..., description="Weight exponent; R**1.5 unless overridden")
    refined: Optional[ApEstimate] = None
    log_change: Optional[float] = Field(None, description="|log Q refined - log Q|")
    stable: Optional[bool] = Field(None, description="Whether Q moved by at most 10% under refinement")
    weighted_bound: Optional[WeightedBoundReport] = None


