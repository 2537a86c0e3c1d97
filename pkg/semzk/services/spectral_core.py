"""
Spectral substrate: transforms, Fourier multipliers and dealiasing on the periodic grid.

The forward transform is unnormalised and the inverse carries 1/(nx*ny), so
Parseval reads ``mean(u**2) == sum(|U|**2) / (nx*ny)**2``.
"""

import logging
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np
import scipy.fft

from semzk.models.grid import Field, Grid2D, Multiplier, MultiplierKind, SpectralField
from semzk.utils.config import get_settings
from semzk.utils.error_handlers import NonFiniteError, ValidationError

logger = logging.getLogger(__name__)

MultiplierLike = Union[MultiplierKind, Multiplier]

# Kinds whose symbol modulus never exceeds one.
CONTRACTIVE_KINDS = frozenset({
    MultiplierKind.NONLOCAL_X,
    MultiplierKind.NONLOCAL_Y,
    MultiplierKind.NONLOCAL_X_COMPLEMENT,
    MultiplierKind.RIESZ_X,
    MultiplierKind.RIESZ_Y,
    MultiplierKind.PROPAGATOR,
})


def make_grid(nx: int, ny: int, lx: float, ly: float) -> Grid2D:
    """Build a validated periodic grid."""
    return Grid2D(nx=nx, ny=ny, lx=lx, ly=ly)


# ---------------------------------------------------------------------------
# Array-level kernels (used directly by the solver's inner loop)
# ---------------------------------------------------------------------------

def fft2(data: np.ndarray) -> np.ndarray:
    return scipy.fft.fft2(data, workers=get_settings().fft_workers)


def ifft2_real(coeffs: np.ndarray) -> np.ndarray:
    return scipy.fft.ifft2(coeffs, workers=get_settings().fft_workers).real


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros(np.broadcast(num, den).shape, dtype=np.result_type(num, den, np.float64))
    np.divide(num, den, out=out, where=den != 0)
    return out


@lru_cache(maxsize=256)
def _symbol_cached(grid: Grid2D, multiplier: Multiplier) -> np.ndarray:
    kx, ky = grid.kx[None, :], grid.ky[:, None]
    ox, oy = grid.kx_odd[None, :], grid.ky_odd[:, None]
    k2 = kx ** 2 + ky ** 2
    kind = multiplier.kind

    if kind == MultiplierKind.DX:
        sym = 1j * ox + 0 * oy
    elif kind == MultiplierKind.DY:
        sym = 1j * oy + 0 * ox
    elif kind == MultiplierKind.LAPLACIAN:
        sym = -k2
    elif kind == MultiplierKind.DX_LAPLACIAN:
        sym = -1j * ox * k2
    elif kind == MultiplierKind.NONLOCAL_X:
        sym = _ratio(kx ** 2 + 0 * ky, k2)
    elif kind == MultiplierKind.NONLOCAL_X_COMPLEMENT:
        sym = _ratio(ky ** 2 + 0 * kx, k2)
    elif kind == MultiplierKind.NONLOCAL_Y:
        sym = _ratio(ox * oy, k2)
    elif kind == MultiplierKind.RIESZ_X:
        sym = -1j * _ratio(ox + 0 * oy, np.sqrt(k2))
    elif kind == MultiplierKind.RIESZ_Y:
        sym = -1j * _ratio(oy + 0 * ox, np.sqrt(k2))
    elif kind == MultiplierKind.BESSEL:
        sym = (1.0 + k2) ** (multiplier.order / 2.0)
    elif kind == MultiplierKind.PROPAGATOR:
        sym = np.exp(1j * multiplier.time * ox * k2)
    elif kind == MultiplierKind.INVERSE_LAPLACIAN:
        sym = -_ratio(np.ones_like(k2), k2)
    elif kind == MultiplierKind.POTENTIAL:
        # phi_hat = i kx / (-|k|^2) u_hat
        sym = -1j * _ratio(ox + 0 * oy, k2)
    else:
        raise ValidationError(f"unsupported multiplier kind: {kind}")

    sym = np.asarray(sym, dtype=np.complex128)
    sym.setflags(write=False)
    return sym


def symbol(grid: Grid2D, multiplier: MultiplierLike) -> np.ndarray:
    """Symbol values on the grid's frequency layout, shape (ny, nx)."""
    if isinstance(multiplier, MultiplierKind):
        multiplier = Multiplier(kind=multiplier)
    elif not isinstance(multiplier, Multiplier):
        raise ValidationError(f"unsupported multiplier kind: {multiplier!r}")
    return _symbol_cached(grid, multiplier)


@lru_cache(maxsize=64)
def _dealias_mask(grid: Grid2D) -> np.ndarray:
    mx = np.abs(np.fft.fftfreq(grid.nx) * grid.nx)
    my = np.abs(np.fft.fftfreq(grid.ny) * grid.ny)
    mask = (my[:, None] <= grid.ny / 3.0) & (mx[None, :] <= grid.nx / 3.0)
    mask.setflags(write=False)
    return mask


def dealias_mask(grid: Grid2D) -> np.ndarray:
    """Boolean mask of retained modes under the two-thirds rule."""
    return _dealias_mask(grid)


def apply_symbol(grid: Grid2D, data: np.ndarray, multiplier: MultiplierLike) -> np.ndarray:
    """Apply a multiplier to real data and return real data."""
    if isinstance(multiplier, Multiplier) and multiplier.kind == MultiplierKind.BESSEL and multiplier.order == 0:
        return np.array(data, dtype=np.float64, copy=True)
    return ifft2_real(symbol(grid, multiplier) * fft2(data))


# ---------------------------------------------------------------------------
# Field-level operations
# ---------------------------------------------------------------------------

def field_from_function(grid: Grid2D, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> Field:
    """Sample ``fn(x, y)`` on the grid."""
    x, y = grid.mesh()
    return Field(grid=grid, data=np.broadcast_to(fn(x, y), grid.shape))


def transform(f: Field) -> SpectralField:
    """Forward (unnormalised) 2D transform."""
    return SpectralField(grid=f.grid, coeffs=fft2(f.data))


def inverse_transform(F: SpectralField) -> Field:
    """Inverse transform; the imaginary round-off part is discarded."""
    return Field(grid=F.grid, data=ifft2_real(F.coeffs))


def apply_multiplier(F: SpectralField, kind: MultiplierLike) -> SpectralField:
    """Coefficient-wise product with the symbol of ``kind``."""
    return SpectralField(grid=F.grid, coeffs=symbol(F.grid, kind) * F.coeffs)


def dealias(F: SpectralField) -> SpectralField:
    """Zero modes with |m| > n/3 in either direction."""
    return SpectralField(grid=F.grid, coeffs=np.where(_dealias_mask(F.grid), F.coeffs, 0.0))


def apply(f: Field, kind: MultiplierLike) -> Field:
    """Real-space application of a multiplier."""
    return Field(grid=f.grid, data=apply_symbol(f.grid, f.data, kind))


def derivative(f: Field, kind: MultiplierKind) -> Field:
    """Spectral derivative, one of DX, DY, LAPLACIAN, DX_LAPLACIAN."""
    if kind not in (MultiplierKind.DX, MultiplierKind.DY, MultiplierKind.LAPLACIAN, MultiplierKind.DX_LAPLACIAN):
        raise ValidationError(f"{kind} is not a derivative multiplier")
    return apply(f, kind)


def parseval_sides(f: Field) -> tuple:
    """(mean square of samples, normalised coefficient energy)."""
    F = fft2(f.data)
    n = f.grid.nx * f.grid.ny
    return float(np.mean(f.data ** 2)), float(np.sum(np.abs(F) ** 2) / n ** 2)


def mean(f: Field) -> float:
    return float(np.mean(f.data))


def integral(f: Field) -> float:
    """Quadrature of f over the torus."""
    return float(np.sum(f.data) * f.grid.cell_area)


def l2_norm(f: Union[Field, np.ndarray], grid: Optional[Grid2D] = None) -> float:
    """L2 norm by quadrature with weight dx*dy."""
    if isinstance(f, Field):
        grid, data = f.grid, f.data
    else:
        data = f
    return float(np.sqrt(np.sum(data ** 2) * grid.cell_area))


def lp_norm(data: np.ndarray, grid: Grid2D, p: float, weight: Optional[np.ndarray] = None) -> float:
    """Weighted L^p quadrature norm."""
    if p <= 1:
        raise ValidationError(f"p must exceed 1, got {p}")
    vals = np.abs(data) ** p
    if weight is not None:
        vals = vals * weight
    return float((np.sum(vals) * grid.cell_area) ** (1.0 / p))


def check_finite(data: np.ndarray, what: str = "data") -> None:
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"{what} contains non-finite values")
