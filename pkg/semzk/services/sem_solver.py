"""
Pseudospectral time stepping for the ZK and SEM equations.

The dispersive part is advanced exactly by its unitary propagator; the
nonlinearity goes through a Lawson (integrating-factor) RK4 step. All state is
kept in Fourier space between snapshots.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np
import scipy.fft

from semzk.models.grid import Field, Grid2D, Multiplier, MultiplierKind
from semzk.models.solver import (
    CoefficientSet,
    InvariantRecord,
    ModelKind,
    ResidualSeries,
    SimulationReport,
    SolverConfig,
    Trajectory,
)
from semzk.services.spectral_core import apply, dealias_mask, fft2, ifft2_real, symbol
from semzk.utils.config import get_settings
from semzk.utils.error_handlers import (
    ConservationDriftError,
    InsufficientDataError,
    NonFiniteError,
    ValidationError,
)
from semzk.utils.logger import LogPerformance
from semzk.utils.performance_monitor import performance_monitor

logger = logging.getLogger(__name__)


def default_time_step(grid: Grid2D, u0: Field) -> float:
    """min(0.1, 0.5 / (k_max * max|u0| + 1))."""
    return min(0.1, 0.5 / (grid.k_max * u0.max_abs() + 1.0))


def solve_potential(u: Field) -> Field:
    """phi with Laplacian(phi) = d_x u and zero mean."""
    return apply(u, MultiplierKind.POTENTIAL)


# ---------------------------------------------------------------------------
# Nonlinear terms
# ---------------------------------------------------------------------------

def _project(grid: Grid2D, coeffs: np.ndarray, dealias: bool) -> np.ndarray:
    return np.where(dealias_mask(grid), coeffs, 0.0) if dealias else coeffs


def _nonlinear_hat(grid: Grid2D, u_hat: np.ndarray, model: ModelKind, dealias: bool) -> np.ndarray:
    """Fourier coefficients of N(u): u u_x (ZK) or (u u_x + u_x d_xL u + u_y d_yL u)/2 (SEM)."""
    dx = symbol(grid, MultiplierKind.DX)
    if model == ModelKind.ZK:
        u = ifft2_real(u_hat)
        return 0.5 * dx * _project(grid, fft2(u * u), dealias)
    dy = symbol(grid, MultiplierKind.DY)
    u = ifft2_real(u_hat)
    ux = ifft2_real(dx * u_hat)
    uy = ifft2_real(dy * u_hat)
    lx = ifft2_real(symbol(grid, MultiplierKind.NONLOCAL_X) * u_hat)
    ly = ifft2_real(symbol(grid, MultiplierKind.NONLOCAL_Y) * u_hat)
    return 0.5 * _project(grid, fft2(u * ux + ux * lx + uy * ly), dealias)


def rhs(u: Field, model: ModelKind, dealias: bool = True) -> Field:
    """-d_x Laplacian(u) - N(u)."""
    model = ModelKind(model)
    if model == ModelKind.LINEARIZED:
        raise ValidationError("rhs is defined for the ZK and SEM models only")
    grid = u.grid
    u_hat = fft2(u.data)
    linear = -symbol(grid, MultiplierKind.DX_LAPLACIAN) * u_hat
    return Field(grid=grid, data=ifft2_real(linear - _nonlinear_hat(grid, u_hat, model, dealias)))


def _lawson_rk4(grid: Grid2D, u_hat: np.ndarray, dt: float, model: ModelKind,
                dealias: bool, linear_only: bool) -> np.ndarray:
    E = symbol(grid, Multiplier.propagator(dt))
    E2 = symbol(grid, Multiplier.propagator(0.5 * dt))
    if linear_only:
        return E * u_hat

    def F(v: np.ndarray) -> np.ndarray:
        return -_nonlinear_hat(grid, v, model, dealias)

    k1 = F(u_hat)
    k2 = F(E2 * (u_hat + 0.5 * dt * k1))
    k3 = F(E2 * u_hat + 0.5 * dt * k2)
    k4 = F(E * u_hat + dt * E2 * k3)
    return E * u_hat + dt / 6.0 * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)


def step(u: Field, dt: float, model: ModelKind, dealias: bool = True, linear_only: bool = False,
         index: int = 1) -> Field:
    """One integrating-factor RK4 step; ``index`` numbers the step in failure details."""
    model = ModelKind(model)
    if model == ModelKind.LINEARIZED:
        raise ValidationError("the linearized model is evaluated as a residual, not stepped")
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    grid = u.grid
    u_hat = _project(grid, fft2(u.data), dealias)
    out = ifft2_real(_lawson_rk4(grid, u_hat, dt, model, dealias, linear_only))
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(f"non-finite values after step {index}",
                             details={"step": index, "max_abs": u.max_abs()})
    return Field(grid=grid, data=out)


# ---------------------------------------------------------------------------
# Invariants
# ---------------------------------------------------------------------------

def conserved(u: Field, model: ModelKind, t: float = 0.0) -> InvariantRecord:
    """Mass, integral of u^2 and, for ZK, H = int(|grad u|^2 / 2 - u^3 / 6)."""
    model = ModelKind(model)
    grid = u.grid
    area = grid.cell_area
    data = u.data
    mass = float(np.sum(data) * area)
    l2 = float(np.sum(data ** 2) * area)
    hamiltonian = None
    if model == ModelKind.ZK:
        u_hat = fft2(data)
        ux = ifft2_real(symbol(grid, MultiplierKind.DX) * u_hat)
        uy = ifft2_real(symbol(grid, MultiplierKind.DY) * u_hat)
        hamiltonian = float(np.sum(0.5 * (ux ** 2 + uy ** 2) - data ** 3 / 6.0) * area)
    return InvariantRecord(t=t, mass=mass, l2=l2, hamiltonian=hamiltonian)


def _relative(value: float, reference: float, scale: float) -> float:
    return abs(value - reference) / max(abs(reference), scale, 1e-300)


def _check_drift(record: InvariantRecord, initial: InvariantRecord, mass_scale: float,
                 model: ModelKind, step_index: int) -> None:
    settings = get_settings()
    mass_drift = _relative(record.mass, initial.mass, mass_scale)
    if mass_drift > settings.conservation_tolerance:
        raise ConservationDriftError(
            f"mass drift {mass_drift:.3e} at t={record.t:.6g}",
            details={"quantity": "mass", "drift": mass_drift, "step": step_index},
        )
    if model == ModelKind.ZK:
        l2_drift = _relative(record.l2, initial.l2, 0.0)
        if l2_drift > settings.conservation_tolerance:
            raise ConservationDriftError(
                f"L2 drift {l2_drift:.3e} at t={record.t:.6g}",
                details={"quantity": "l2", "drift": l2_drift, "step": step_index},
            )
        h_drift = _relative(record.hamiltonian, initial.hamiltonian, 0.0)
        if h_drift > settings.hamiltonian_tolerance:
            raise ConservationDriftError(
                f"Hamiltonian drift {h_drift:.3e} at t={record.t:.6g}",
                details={"quantity": "hamiltonian", "drift": h_drift, "step": step_index},
            )


@performance_monitor.measure_time("evolve")
def evolve(u0: Field, config: SolverConfig) -> Trajectory:
    """Integrate to t_end, recording a snapshot every ``snapshot_every`` steps and at the end."""
    if config.model == ModelKind.LINEARIZED:
        raise ValidationError("the linearized model is evaluated as a residual, not evolved")
    if u0.grid != config.grid:
        raise ValidationError("initial data grid differs from the configured grid")
    grid, model = config.grid, config.model

    heuristic = default_time_step(grid, u0)
    dt = config.dt if config.dt is not None else heuristic
    if dt > heuristic * (1 + 1e-12) and not config.allow_large_dt:
        raise ValidationError(
            f"dt={dt:g} exceeds the stability heuristic {heuristic:g}; set allow_large_dt to override",
            details={"dt": dt, "heuristic": heuristic},
        )
    steps = 0 if config.t_end == 0 else max(1, math.ceil(config.t_end / dt - 1e-9))
    if steps:
        dt = config.t_end / steps

    u_hat = _project(grid, fft2(u0.data), config.dealias)
    current = Field(grid=grid, data=ifft2_real(u_hat))
    initial = conserved(current, model, 0.0)
    mass_scale = float(np.sum(np.abs(current.data)) * grid.cell_area)
    times, snapshots, log = [0.0], [current], [initial]

    with LogPerformance("evolve", model=model.value, steps=steps, grid=grid.identifier):
        for n in range(1, steps + 1):
            u_hat = _lawson_rk4(grid, u_hat, dt, model, config.dealias, False)
            if not np.all(np.isfinite(u_hat)):
                last = snapshots[-1].max_abs()
                raise NonFiniteError(
                    f"non-finite values at step {n}",
                    details={"step": n, "t": n * dt, "max_abs_last_snapshot": last},
                )
            if n % config.snapshot_every == 0 or n == steps:
                field = Field(grid=grid, data=ifft2_real(u_hat))
                record = conserved(field, model, n * dt)
                if config.strict:
                    _check_drift(record, initial, mass_scale, model, n)
                times.append(n * dt)
                snapshots.append(field)
                log.append(record)

    logger.info(f"{model.value} evolution: {steps} steps of dt={dt:.3e}, {len(snapshots)} snapshots")
    return Trajectory(model=model, grid=grid, dt=dt if steps else (config.dt or heuristic),
                      dealias=config.dealias, times=times, snapshots=snapshots, invariant_log=log)


# ---------------------------------------------------------------------------
# Linearized difference equation
# ---------------------------------------------------------------------------

def _require_matching(u1: Trajectory, u2: Trajectory) -> None:
    if u1.grid != u2.grid:
        raise ValidationError("trajectories live on different grids")
    if len(u1.times) != len(u2.times) or not np.allclose(u1.times, u2.times, rtol=0.0, atol=1e-12):
        raise ValidationError("trajectories use different time ladders")


def trajectory_difference(u1: Trajectory, u2: Trajectory) -> Trajectory:
    """v = u1 - u2 snapshot by snapshot."""
    _require_matching(u1, u2)
    snapshots = [Field(grid=u1.grid, data=a.data - b.data) for a, b in zip(u1.snapshots, u2.snapshots)]
    log = [conserved(s, ModelKind.LINEARIZED, t) for s, t in zip(snapshots, u1.times)]
    return Trajectory(model=ModelKind.LINEARIZED, grid=u1.grid, dt=u1.dt, dealias=u1.dealias and u2.dealias,
                      times=list(u1.times), snapshots=snapshots, invariant_log=log)


def linearized_coefficients(u1: Trajectory, u2: Trajectory) -> CoefficientSet:
    """a1 = (u1 + d_xL u2)/2, b1 = d_yL u2 / 2, a0 = d_x u1 / 2, b0 = d_y u1 / 2, c0 = d_x u2 / 2."""
    _require_matching(u1, u2)
    grid = u1.grid

    def half(data: np.ndarray) -> Field:
        return Field(grid=grid, data=0.5 * data)

    series = {name: [] for name in ("a1", "b1", "a0", "b0", "c0")}
    for f1, f2 in zip(u1.snapshots, u2.snapshots):
        h1, h2 = fft2(f1.data), fft2(f2.data)
        series["a1"].append(half(f1.data + ifft2_real(symbol(grid, MultiplierKind.NONLOCAL_X) * h2)))
        series["b1"].append(half(ifft2_real(symbol(grid, MultiplierKind.NONLOCAL_Y) * h2)))
        series["a0"].append(half(ifft2_real(symbol(grid, MultiplierKind.DX) * h1)))
        series["b0"].append(half(ifft2_real(symbol(grid, MultiplierKind.DY) * h1)))
        series["c0"].append(half(ifft2_real(symbol(grid, MultiplierKind.DX) * h2)))
    return CoefficientSet(times=list(u1.times), **series)


def residual_eq_v(v: Trajectory, coeffs: CoefficientSet, dealias: Optional[bool] = None) -> ResidualSeries:
    """L2 norm of v_t + d_x Lap v + a1 v_x + b1 v_y + a0 d_xL v + b0 d_yL v + c0 v at interior snapshots.

    v_t is the centered difference over neighbouring snapshots.
    """
    if len(v.snapshots) < 3:
        raise InsufficientDataError(f"need at least 3 snapshots, got {len(v.snapshots)}")
    if len(coeffs.times) != len(v.times) or not np.allclose(coeffs.times, v.times, rtol=0.0, atol=1e-12):
        raise ValidationError("coefficients and v use different time ladders")
    dealias = v.dealias if dealias is None else dealias
    grid = v.grid
    syms = {kind: symbol(grid, kind) for kind in (
        MultiplierKind.DX, MultiplierKind.DY, MultiplierKind.DX_LAPLACIAN,
        MultiplierKind.NONLOCAL_X, MultiplierKind.NONLOCAL_Y)}

    times: List[float] = []
    residuals: List[float] = []
    for i in range(1, len(v.snapshots) - 1):
        span = v.times[i + 1] - v.times[i - 1]
        vt = (v.snapshots[i + 1].data - v.snapshots[i - 1].data) / span
        vh = fft2(v.snapshots[i].data)
        vx = ifft2_real(syms[MultiplierKind.DX] * vh)
        vy = ifft2_real(syms[MultiplierKind.DY] * vh)
        lx = ifft2_real(syms[MultiplierKind.NONLOCAL_X] * vh)
        ly = ifft2_real(syms[MultiplierKind.NONLOCAL_Y] * vh)
        products = (coeffs.a1[i].data * vx + coeffs.b1[i].data * vy + coeffs.a0[i].data * lx
                    + coeffs.b0[i].data * ly + coeffs.c0[i].data * v.snapshots[i].data)
        if dealias:
            products = ifft2_real(_project(grid, fft2(products), True))
        total = vt + ifft2_real(syms[MultiplierKind.DX_LAPLACIAN] * vh) + products
        times.append(v.times[i])
        residuals.append(float(np.sqrt(np.sum(total ** 2) * grid.cell_area)))
    return ResidualSeries(times=times, residuals=residuals)


# ---------------------------------------------------------------------------
# Line solitons and the 1D reference
# ---------------------------------------------------------------------------

def soliton_profile(x: np.ndarray, c: float, x0: float = 0.0, period: Optional[float] = None) -> np.ndarray:
    """3c sech^2(sqrt(c)(x - x0)/2), wrapped to the nearest periodic image when ``period`` is given."""
    if c <= 0:
        raise ValidationError(f"soliton speed must be positive, got {c}")
    s = np.asarray(x, dtype=np.float64) - x0
    if period is not None:
        s = (s + period / 2.0) % period - period / 2.0
    return 3.0 * c / np.cosh(0.5 * math.sqrt(c) * s) ** 2


def line_soliton(grid: Grid2D, c: float, x0: float = 0.0, zero_mean: bool = False) -> Field:
    """y-independent KdV soliton; the zero-mean version travels at c - mean."""
    profile = soliton_profile(grid.x, c, x0, period=grid.lx)
    if zero_mean:
        profile = profile - np.mean(profile)
    return Field(grid=grid, data=np.broadcast_to(profile[None, :], grid.shape))


def soliton_invariants_1d(c: float) -> Tuple[float, float]:
    """(int u dx, int u^2 dx) of the soliton on the line: 12 sqrt(c) and 24 c^{3/2}."""
    return 12.0 * math.sqrt(c), 24.0 * c ** 1.5


def evolve_kdv_1d(u0: np.ndarray, lx: float, dt: float, steps: int, dealias: bool = True) -> np.ndarray:
    """u_t + u_xxx + u u_x = 0 on a periodic line, same scheme as the 2D solver.

    The nonlinearity is formed as P(u * u_x), matching the y-independent SEM reduction.
    """
    u0 = np.asarray(u0, dtype=np.float64)
    n = u0.size
    if n % 2 or n < 8:
        raise ValidationError(f"1D grid size must be even and >= 8, got {n}")
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=lx / n)
    k[n // 2] = 0.0
    mask = np.abs(np.fft.fftfreq(n) * n) <= n / 3.0 if dealias else np.ones(n, dtype=bool)
    E = np.exp(1j * dt * k ** 3)
    E2 = np.exp(0.5j * dt * k ** 3)

    def F(v: np.ndarray) -> np.ndarray:
        u = scipy.fft.ifft(v).real
        ux = scipy.fft.ifft(1j * k * v).real
        return -np.where(mask, scipy.fft.fft(u * ux), 0.0)

    u_hat = np.where(mask, scipy.fft.fft(u0), 0.0)
    for _ in range(steps):
        k1 = F(u_hat)
        k2 = F(E2 * (u_hat + 0.5 * dt * k1))
        k3 = F(E2 * u_hat + 0.5 * dt * k2)
        k4 = F(E * u_hat + dt * E2 * k3)
        u_hat = E * u_hat + dt / 6.0 * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)
    return scipy.fft.ifft(u_hat).real


def measure_speed(trajectory: Trajectory) -> float:
    """Drift speed of the first x Fourier mode's phase, fitted over all snapshots."""
    if len(trajectory.snapshots) < 2:
        raise InsufficientDataError("need at least 2 snapshots to measure a speed")
    lx = trajectory.grid.lx
    phases = []
    for snap in trajectory.snapshots:
        profile = np.mean(snap.data, axis=0)
        phases.append(np.angle(np.fft.fft(profile)[1]))
    positions = -np.unwrap(np.asarray(phases)) * lx / (2.0 * np.pi)
    slope, _ = np.polyfit(np.asarray(trajectory.times), positions, 1)
    return float(slope)


def simulation_report(trajectory: Trajectory, seed: Optional[int] = None) -> SimulationReport:
    """Invariant drift between the first and last snapshot."""
    initial, final = trajectory.invariant_log[0], trajectory.invariant_log[-1]
    mass_scale = float(np.sum(np.abs(trajectory.snapshots[0].data)) * trajectory.grid.cell_area)
    h_drift = None
    if initial.hamiltonian is not None and final.hamiltonian is not None:
        h_drift = _relative(final.hamiltonian, initial.hamiltonian, 0.0)
    return SimulationReport(
        seed=seed,
        model=trajectory.model,
        grid=trajectory.grid,
        dt=trajectory.dt,
        steps=int(round(trajectory.times[-1] / trajectory.dt)),
        snapshot_count=len(trajectory),
        initial=initial,
        final=final,
        mass_drift=_relative(final.mass, initial.mass, mass_scale),
        l2_drift=_relative(final.l2, initial.l2, 0.0),
        hamiltonian_drift=h_drift,
    )
