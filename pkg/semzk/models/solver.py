"""
Solver configuration, trajectories and linearized-equation coefficient models.
"""

from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydanticField, field_validator, model_validator

from semzk.models.base import ReportBase
from semzk.models.grid import Field, Grid2D
from semzk.utils.error_handlers import ValidationError


class ModelKind(str, Enum):
    """Evolution equations. LINEARIZED is only evaluated as a residual."""
    ZK = "zk"
    SEM = "sem"
    LINEARIZED = "linearized"


class SolverConfig(BaseModel):
    """Time-stepping configuration."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    model: ModelKind = ModelKind.ZK
    grid: Grid2D
    dt: Optional[float] = PydanticField(None, description="Time step; defaults to the advective heuristic")
    t_end: float = PydanticField(..., description="Final time")
    snapshot_every: int = PydanticField(1, description="Steps between snapshots")
    dealias: bool = True
    strict: bool = PydanticField(False, description="Abort when an invariant drifts beyond tolerance")
    allow_large_dt: bool = PydanticField(False, description="Accept dt above the heuristic")

    @field_validator("dt")
    @classmethod
    def _positive_dt(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not (np.isfinite(v) and v > 0):
            raise ValidationError(f"dt must be positive, got {v}")
        return v

    @field_validator("t_end")
    @classmethod
    def _nonnegative_end(cls, v: float) -> float:
        if not (np.isfinite(v) and v >= 0):
            raise ValidationError(f"t_end must be >= 0, got {v}")
        return v

    @field_validator("snapshot_every")
    @classmethod
    def _cadence(cls, v: int) -> int:
        if v < 1:
            raise ValidationError(f"snapshot_every must be >= 1, got {v}")
        return v


class InvariantRecord(BaseModel):
    """Conserved functionals at one snapshot."""
    t: float
    mass: float
    l2: float = PydanticField(..., description="Integral of u^2")
    hamiltonian: Optional[float] = PydanticField(None, description="ZK only")


class Trajectory(BaseModel):
    """Snapshots of one run; immutable once built."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    model: ModelKind
    grid: Grid2D
    dt: float
    dealias: bool = True
    times: List[float]
    snapshots: List[Field]
    invariant_log: List[InvariantRecord]

    @model_validator(mode="after")
    def _consistent(self) -> "Trajectory":
        if len(self.times) != len(self.snapshots) or len(self.times) != len(self.invariant_log):
            raise ValidationError("times, snapshots and invariant_log must have equal length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValidationError("snapshot times must be strictly increasing")
        if any(s.grid != self.grid for s in self.snapshots):
            raise ValidationError("all snapshots must share the trajectory grid")
        return self

    @property
    def final(self) -> Field:
        return self.snapshots[-1]

    def __len__(self) -> int:
        return len(self.snapshots)


class CoefficientSet(BaseModel):
    """Time series of a1, b1, a0, b0, c0 on the trajectory time ladder."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times: List[float]
    a1: List[Field]
    b1: List[Field]
    a0: List[Field]
    b0: List[Field]
    c0: List[Field]

    @model_validator(mode="after")
    def _same_length(self) -> "CoefficientSet":
        n = len(self.times)
        if any(len(getattr(self, name)) != n for name in ("a1", "b1", "a0", "b0", "c0")):
            raise ValidationError("every coefficient series must match the time ladder")
        return self


class ResidualSeries(BaseModel):
    """Residual L2 norms of the linearized difference equation at interior snapshot times."""
    times: List[float]
    residuals: List[float]

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)


class SimulationReport(ReportBase):
    kind: str = "simulate"
    model: ModelKind
    grid: Grid2D
    dt: float
    steps: int
    snapshot_count: int
    initial: InvariantRecord
    final: InvariantRecord
    mass_drift: float = PydanticField(..., description="Relative mass drift")
    l2_drift: float = PydanticField(..., description="Relative L2 drift")
    hamiltonian_drift: Optional[float] = None
