"""
Initial-data families, discriminated on ``family``.
"""

from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field


class GaussianData(BaseModel):
    """amplitude * exp(-((x-x0)^2 + (y-y0)^2) / (2 sigma^2))."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    family: Literal["gaussian"] = "gaussian"
    amplitude: float = 0.5
    sigma: float = Field(2.0, gt=0)
    x0: float = 0.0
    y0: float = 0.0


class LineSolitonData(BaseModel):
    """y-independent soliton of speed c centred at x0."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    family: Literal["line_soliton"] = "line_soliton"
    c: float = Field(1.0, gt=0)
    x0: float = 0.0
    zero_mean: bool = False


class PerturbedData(BaseModel):
    """A Gaussian base plus a localized Gaussian bump."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    family: Literal["perturbed_pair"] = "perturbed_pair"
    base: GaussianData = Field(default_factory=GaussianData)
    bump_amplitude: float = 1e-3
    bump_sigma: float = Field(1.0, gt=0)
    bump_x0: float = 0.0
    bump_y0: float = 0.0


class SnapshotData(BaseModel):
    """Field read from a snapshot file on the same grid."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    family: Literal["snapshot"] = "snapshot"
    path: str


InitialData = Annotated[
    Union[GaussianData, LineSolitonData, PerturbedData, SnapshotData],
    Field(discriminator="family"),
]
