"""
Grid and field models for the periodic computational torus.

Field data are stored with shape ``(ny, nx)``: row-major flattening gives the
``iy * nx + ix`` ordering, x fastest. Sample points sit at ``ix*dx - Lx/2``.
"""

from enum import Enum
from functools import lru_cache
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydanticField, field_validator, model_validator

from semzk.utils.error_handlers import NonFiniteError, ValidationError


@lru_cache(maxsize=64)
def _wavenumbers(n: int, length: float) -> np.ndarray:
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)
    k.setflags(write=False)
    return k


@lru_cache(maxsize=64)
def _odd_wavenumbers(n: int, length: float) -> np.ndarray:
    k = _wavenumbers(n, length).copy()
    k[n // 2] = 0.0
    k.setflags(write=False)
    return k


@lru_cache(maxsize=64)
def _coordinates(n: int, length: float) -> np.ndarray:
    x = np.arange(n) * (length / n) - length / 2.0
    x.setflags(write=False)
    return x


class Grid2D(BaseModel):
    """Periodic 2D grid standing in for the plane."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    nx: int = PydanticField(..., description="Modes in x (even, >= 8)")
    ny: int = PydanticField(..., description="Modes in y (even, >= 8)")
    lx: float = PydanticField(..., description="Domain length in x")
    ly: float = PydanticField(..., description="Domain length in y")

    @field_validator("nx", "ny")
    @classmethod
    def _even_and_large(cls, v: int, info) -> int:
        if v < 8:
            raise ValidationError(f"{info.field_name} must be >= 8, got {v}")
        if v % 2 != 0:
            raise ValidationError(f"{info.field_name} must be even, got {v}")
        return v

    @field_validator("lx", "ly")
    @classmethod
    def _positive_length(cls, v: float, info) -> float:
        if not np.isfinite(v) or v <= 0:
            raise ValidationError(f"{info.field_name} must be positive, got {v}")
        return float(v)

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def shape(self) -> tuple:
        return (self.ny, self.nx)

    @property
    def kx(self) -> np.ndarray:
        """Angular wavenumbers in x, numpy fftfreq ordering."""
        return _wavenumbers(self.nx, self.lx)

    @property
    def ky(self) -> np.ndarray:
        return _wavenumbers(self.ny, self.ly)

    @property
    def kx_odd(self) -> np.ndarray:
        """kx with the Nyquist entry zeroed, for odd symbols."""
        return _odd_wavenumbers(self.nx, self.lx)

    @property
    def ky_odd(self) -> np.ndarray:
        return _odd_wavenumbers(self.ny, self.ly)

    @property
    def x(self) -> np.ndarray:
        return _coordinates(self.nx, self.lx)

    @property
    def y(self) -> np.ndarray:
        return _coordinates(self.ny, self.ly)

    def mesh(self) -> tuple:
        """Coordinate arrays of shape (ny, nx)."""
        return np.meshgrid(self.x, self.y, indexing="xy")

    @property
    def k_max(self) -> float:
        return float(max(np.max(np.abs(self.kx)), np.max(np.abs(self.ky))))

    @property
    def identifier(self) -> str:
        return f"{self.nx}x{self.ny}@{self.lx:g}x{self.ly:g}"


def _frozen_array(value: Any, dtype, shape: tuple, name: str) -> np.ndarray:
    arr = np.array(value, dtype=dtype, copy=True)
    if arr.ndim == 1 and arr.size == shape[0] * shape[1]:
        arr = arr.reshape(shape)
    if arr.shape != shape:
        raise ValidationError(f"{name} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.count_nonzero(~np.isfinite(arr)))
        raise NonFiniteError(f"{name} contains {bad} non-finite entries", details={"count": bad})
    arr.setflags(write=False)
    return arr


class Field(BaseModel):
    """Real samples on the grid."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid2D
    data: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _check_data(cls, values: Any) -> Any:
        if isinstance(values, dict) and "grid" in values and "data" in values:
            grid = values["grid"]
            if isinstance(grid, dict):
                grid = Grid2D(**grid)
            data = np.asarray(values["data"])
            if np.iscomplexobj(data):
                raise ValidationError("Field data must be real")
            values = {"grid": grid, "data": _frozen_array(data, np.float64, grid.shape, "Field data")}
        return values

    @classmethod
    def zeros(cls, grid: Grid2D) -> "Field":
        return cls(grid=grid, data=np.zeros(grid.shape))

    @property
    def flat(self) -> np.ndarray:
        """Samples in iy*nx + ix order."""
        return self.data.reshape(-1)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.data)))


class SpectralField(BaseModel):
    """Fourier coefficients in the layout of the forward transform."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid2D
    coeffs: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _check_coeffs(cls, values: Any) -> Any:
        if isinstance(values, dict) and "grid" in values and "coeffs" in values:
            grid = values["grid"]
            if isinstance(grid, dict):
                grid = Grid2D(**grid)
            values = {
                "grid": grid,
                "coeffs": _frozen_array(values["coeffs"], np.complex128, grid.shape, "SpectralField coeffs"),
            }
        return values


class MultiplierKind(str, Enum):
    """Fourier multipliers on the torus."""
    DX = "dx"
    DY = "dy"
    LAPLACIAN = "laplacian"
    DX_LAPLACIAN = "dx_laplacian"
    NONLOCAL_X = "nonlocal_x"
    NONLOCAL_Y = "nonlocal_y"
    NONLOCAL_X_COMPLEMENT = "nonlocal_x_complement"
    RIESZ_X = "riesz_x"
    RIESZ_Y = "riesz_y"
    BESSEL = "bessel"
    PROPAGATOR = "propagator"
    INVERSE_LAPLACIAN = "inverse_laplacian"
    POTENTIAL = "potential"


class Multiplier(BaseModel):
    """A multiplier kind with its parameter: Bessel order ``s`` or propagator time ``t``."""
    model_config = ConfigDict(frozen=True)

    kind: MultiplierKind
    order: float = PydanticField(0.0, description="Bessel potential order s")
    time: float = PydanticField(0.0, description="Propagator time t")

    @field_validator("order", "time")
    @classmethod
    def _finite(cls, v: float, info) -> float:
        if not np.isfinite(v):
            raise ValidationError(f"multiplier {info.field_name} must be finite")
        return float(v)

    @classmethod
    def bessel(cls, s: float) -> "Multiplier":
        return cls(kind=MultiplierKind.BESSEL, order=s)

    @classmethod
    def propagator(cls, t: float) -> "Multiplier":
        return cls(kind=MultiplierKind.PROPAGATOR, time=t)
