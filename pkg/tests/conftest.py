"""Shared grids, seeds and settings isolation."""

import numpy as np
import pytest

from semzk.models.grid import Field, Grid2D
from semzk.utils.config import reset_settings
from semzk.utils.performance_monitor import performance_monitor


@pytest.fixture(autouse=True)
def default_settings():
    """Every test starts from default settings."""
    reset_settings()
    yield
    reset_settings()
    performance_monitor.reset()


@pytest.fixture
def seed() -> int:
    return 20240607


@pytest.fixture
def rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


@pytest.fixture
def small_grid() -> Grid2D:
    return Grid2D(nx=16, ny=16, lx=2 * np.pi, ly=2 * np.pi)


@pytest.fixture
def medium_grid() -> Grid2D:
    return Grid2D(nx=64, ny=64, lx=40.0, ly=40.0)


@pytest.fixture
def random_field(medium_grid, rng) -> Field:
    return Field(grid=medium_grid, data=rng.normal(size=medium_grid.shape))


@pytest.fixture
def make_gaussian():
    """Factory for isotropic Gaussian fields."""
    def build(grid: Grid2D, amplitude: float = 1.0, sigma: float = 2.0,
              x0: float = 0.0, y0: float = 0.0) -> Field:
        x, y = grid.mesh()
        return Field(grid=grid, data=amplitude * np.exp(-((x - x0) ** 2 + (y - y0) ** 2) / (2 * sigma ** 2)))
    return build
