"""
Sampling of initial-data families on a grid.
"""

import numpy as np

from semzk.models.grid import Field, Grid2D
from semzk.models.initial_data import GaussianData, LineSolitonData, PerturbedData, SnapshotData
from semzk.services.sem_solver import line_soliton
from semzk.services.snapshot_io import read_snapshot
from semzk.utils.error_handlers import ValidationError


def _gaussian(grid: Grid2D, amplitude: float, sigma: float, x0: float, y0: float) -> np.ndarray:
    x, y = grid.mesh()
    return amplitude * np.exp(-((x - x0) ** 2 + (y - y0) ** 2) / (2.0 * sigma ** 2))


def build_initial_field(grid: Grid2D, source) -> Field:
    if isinstance(source, GaussianData):
        return Field(grid=grid, data=_gaussian(grid, source.amplitude, source.sigma, source.x0, source.y0))
    if isinstance(source, LineSolitonData):
        return line_soliton(grid, source.c, source.x0, zero_mean=source.zero_mean)
    if isinstance(source, PerturbedData):
        base = source.base
        data = _gaussian(grid, base.amplitude, base.sigma, base.x0, base.y0)
        data = data + _gaussian(grid, source.bump_amplitude, source.bump_sigma, source.bump_x0, source.bump_y0)
        return Field(grid=grid, data=data)
    if isinstance(source, SnapshotData):
        field = read_snapshot(source.path).field
        if field.grid != grid:
            raise ValidationError(
                f"snapshot grid {field.grid.identifier} differs from the configured grid {grid.identifier}"
            )
        return field
    raise ValidationError(f"unknown initial-data family: {source!r}")
