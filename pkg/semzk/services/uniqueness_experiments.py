"""
Annulus norms of solution differences, decay-law fits and the two-run uniqueness contrast.
"""

import logging
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import curve_fit

from semzk.models.base import Verdict
from semzk.models.grid import Field, Grid2D, MultiplierKind
from semzk.models.solver import ModelKind, SolverConfig, Trajectory
from semzk.models.uniqueness import (
    UPPER_RADIUS_FACTOR,
    AnnulusReport,
    BoundaryCertificate,
    DecayFit,
    EndpointWeightedNorms,
    ExperimentConfig,
    PowerFit,
    RadiusConvention,
    UniquenessReport,
    Window,
)
from semzk.services.initial_data import build_initial_field
from semzk.services.sem_solver import evolve, trajectory_difference
from semzk.services.spectral_core import fft2, ifft2_real, symbol
from semzk.utils.config import get_settings
from semzk.utils.error_handlers import (
    DomainError,
    InsufficientDataError,
    OverflowGuardError,
    ValidationError,
)
from semzk.utils.logger import LogPerformance
from semzk.utils.performance_monitor import performance_monitor

logger = logging.getLogger(__name__)

IDENTICAL_THRESHOLD = 1e-12
A0_FACTOR = 16.0 * UPPER_RADIUS_FACTOR ** 1.5


def five_term_integrand(field: Field) -> np.ndarray:
    """|v|^2 + |v_x|^2 + |v_y|^2 + |v_xy|^2 + |Laplacian v|^2 with spectral derivatives."""
    grid = field.grid
    vh = fft2(field.data)
    dx, dy = symbol(grid, MultiplierKind.DX), symbol(grid, MultiplierKind.DY)
    vx = ifft2_real(dx * vh)
    vy = ifft2_real(dy * vh)
    vxy = ifft2_real(dx * dy * vh)
    lap = ifft2_real(symbol(grid, MultiplierKind.LAPLACIAN) * vh)
    return field.data ** 2 + vx ** 2 + vy ** 2 + vxy ** 2 + lap ** 2


def annulus_mask(grid: Grid2D, R: float) -> np.ndarray:
    """Sharp indicator of R - 1 <= sqrt(x^2 + y^2) <= R on grid points."""
    if R < 1:
        raise ValidationError(f"annulus radius must be >= 1, got {R}")
    margin = 2.0 * max(grid.dx, grid.dy)
    half = 0.5 * min(grid.lx, grid.ly)
    if R + margin > half:
        raise DomainError(
            f"annulus of radius {R:g} exceeds the domain (half-width {half:g}, margin {margin:g})",
            details={"R": R, "half_width": half, "margin": margin},
        )
    x, y = grid.mesh()
    rho = np.hypot(x, y)
    return (rho >= R - 1.0) & (rho <= R)


def _masked_sums(integrands: Sequence[np.ndarray], grid: Grid2D, R: float) -> np.ndarray:
    mask = annulus_mask(grid, R)
    return np.array([float(np.sum(g[mask]) * grid.cell_area) for g in integrands])


def annulus_norm_at(field: Field, R: float) -> float:
    """Single-time annulus norm."""
    return float(np.sqrt(_masked_sums([five_term_integrand(field)], field.grid, R)[0]))


def _require_snapshots(v: Trajectory) -> None:
    if len(v.snapshots) < 2:
        raise InsufficientDataError("the time integral needs at least 2 snapshots")


def annulus_norm(v: Trajectory, R: float) -> float:
    """A_R(v): space-time norm over the annulus, trapezoid over snapshot times."""
    _require_snapshots(v)
    sums = _masked_sums([five_term_integrand(s) for s in v.snapshots], v.grid, R)
    return float(np.sqrt(max(trapezoid(sums, x=np.asarray(v.times)), 0.0)))


def decay_profile(v: Trajectory, radii: Sequence[float], trajectory_id: str = "",
                  seed: Optional[int] = None) -> AnnulusReport:
    """A_R over the time interval and at the first and last snapshot, for each radius."""
    radii = [float(r) for r in radii]
    if not radii or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValidationError("radii must be a non-empty strictly increasing list")
    _require_snapshots(v)
    integrands = [five_term_integrand(s) for s in v.snapshots]
    times = np.asarray(v.times)
    interval, initial, final = [], [], []
    for R in radii:
        sums = _masked_sums(integrands, v.grid, R)
        interval.append(float(np.sqrt(max(trapezoid(sums, x=times), 0.0))))
        initial.append(float(np.sqrt(sums[0])))
        final.append(float(np.sqrt(sums[-1])))
    return AnnulusReport(seed=seed, grid=v.grid.identifier, trajectory=trajectory_id, radii=radii,
                         a_values=interval, a_initial=initial, a_final=final)


def _positive_points(report: AnnulusReport, window: Window, minimum: int):
    values = np.asarray(report.values(window), dtype=np.float64)
    radii = np.asarray(report.radii, dtype=np.float64)
    keep = np.isfinite(values) & (values > 0)
    if int(np.count_nonzero(keep)) < minimum:
        raise InsufficientDataError(
            f"need at least {minimum} positive A_R values, got {int(np.count_nonzero(keep))}",
            details={"window": Window(window).value},
        )
    return radii[keep], values[keep]


def fit_exponent(report: AnnulusReport, window: Union[Window, str] = Window.INTERVAL,
                 convention: Union[RadiusConvention, str] = RadiusConvention.AT_R) -> DecayFit:
    """Least squares of log A_R against (1, -rho^{3/2}), rho = R or R / 28."""
    window, convention = Window(window), RadiusConvention(convention)
    radii, values = _positive_points(report, window, 3)
    rho = radii / UPPER_RADIUS_FACTOR if convention == RadiusConvention.AT_28R else radii
    design = np.column_stack([np.ones_like(rho), -rho ** 1.5])
    coef, *_ = np.linalg.lstsq(design, np.log(values), rcond=None)
    residual = float(np.sqrt(np.mean((design @ coef - np.log(values)) ** 2)))
    return DecayFit(c0_fit=float(np.exp(coef[0])), c1_fit=float(coef[1]), residual=residual,
                    radii_used=radii.tolist(), window=window, convention=convention)


def fit_decay_power(report: AnnulusReport, window: Union[Window, str] = Window.INTERVAL) -> PowerFit:
    """log A_R = log c0 - c1 R^gamma with gamma free."""
    window = Window(window)
    radii, values = _positive_points(report, window, 4)
    logs = np.log(values)
    start = fit_exponent(report, window)

    def model(r, log_c0, c1, gamma):
        return log_c0 - c1 * r ** gamma

    try:
        params, _ = curve_fit(model, radii, logs, p0=(np.log(start.c0_fit), start.c1_fit, 1.5),
                              bounds=([-np.inf, -np.inf, 0.1], [np.inf, np.inf, 4.0]), maxfev=20000)
    except RuntimeError as e:
        raise InsufficientDataError(f"decay power fit did not converge: {e}")
    residual = float(np.sqrt(np.mean((model(radii, *params) - logs) ** 2)))
    return PowerFit(c0_fit=float(np.exp(params[0])), c1_fit=float(params[1]), gamma=float(params[2]),
                    residual=residual, radii_used=radii.tolist())


# ---------------------------------------------------------------------------
# Experiment
# ---------------------------------------------------------------------------

def _band_max(data: np.ndarray, band: int) -> float:
    a = np.abs(data)
    return float(max(np.max(a[:band, :]), np.max(a[-band:, :]), np.max(a[:, :band]), np.max(a[:, -band:])))


def boundary_certificate(u1: Trajectory, u2: Trajectory, v: Trajectory) -> BoundaryCertificate:
    band = get_settings().boundary_band
    return BoundaryCertificate(
        band=band,
        u1_max=max(_band_max(s.data, band) for s in u1.snapshots),
        u2_max=max(_band_max(s.data, band) for s in u2.snapshots),
        v_max=max(_band_max(s.data, band) for s in v.snapshots),
    )


def core_mass(v: Trajectory, margin: float) -> float:
    """||v|| over {r <= 1} x [margin T, (1 - margin) T]."""
    x, y = v.grid.mesh()
    inside = np.hypot(x, y) <= 1.0
    t_end = v.times[-1]
    times = np.asarray(v.times)
    window = (times >= margin * t_end - 1e-12) & (times <= (1.0 - margin) * t_end + 1e-12)
    if int(np.count_nonzero(window)) < 2:
        return 0.0
    sums = np.array([float(np.sum(s.data[inside] ** 2) * v.grid.cell_area)
                     for s, keep in zip(v.snapshots, window) if keep])
    return float(np.sqrt(max(trapezoid(sums, x=times[window]), 0.0)))


def endpoint_weighted_norms(v: Trajectory, a: float) -> EndpointWeightedNorms:
    """||e^{a r^{3/2}/2} v(t)|| at the first and last snapshot."""
    grid = v.grid
    x, y = grid.mesh()
    exponent = 0.5 * a * np.hypot(x, y) ** 1.5
    cap = get_settings().exponent_cap
    peak = float(np.max(exponent))
    if peak > cap:
        raise OverflowGuardError(f"endpoint weight exponent {peak:.6g} exceeds cap {cap:g}",
                                 details={"max_exponent": peak, "cap": cap})
    weight = np.exp(exponent)

    def norm(field: Field) -> float:
        return float(np.sqrt(np.sum((weight * field.data) ** 2) * grid.cell_area))

    return EndpointWeightedNorms(probe_a=a, initial=norm(v.snapshots[0]), final=norm(v.snapshots[-1]))


def _try_fit(report: AnnulusReport, window: Window, convention: RadiusConvention) -> Optional[DecayFit]:
    try:
        return fit_exponent(report, window, convention)
    except InsufficientDataError as e:
        logger.warning(f"No {window.value}/{convention.value} decay fit: {e.message}")
        return None


@performance_monitor.measure_time("uniqueness_experiment")
def uniqueness_experiment(cfg: ExperimentConfig) -> UniquenessReport:
    """Evolve two SEM runs, form v = u1 - u2 and measure its annulus decay."""
    grid = cfg.grid
    solver = SolverConfig(model=ModelKind.SEM, grid=grid, dt=cfg.dt, t_end=cfg.t_end,
                          snapshot_every=cfg.snapshot_every, dealias=cfg.dealias, allow_large_dt=True)
    f1 = build_initial_field(grid, cfg.u1)
    f2 = build_initial_field(grid, cfg.u2)

    with LogPerformance("uniqueness_experiment", grid=grid.identifier, t_end=cfg.t_end):
        u1 = evolve(f1, solver)
        u2 = evolve(f2, solver)
        v = trajectory_difference(u1, u2)
        max_abs_v = max(s.max_abs() for s in v.snapshots)
        verdict = Verdict.IDENTICAL if max_abs_v < IDENTICAL_THRESHOLD else Verdict.DISTINCT
        profile = decay_profile(v, cfg.radii, trajectory_id="u1-u2", seed=cfg.seed)

    fits: Dict[str, Optional[DecayFit]] = {}
    power = None
    if verdict == Verdict.DISTINCT:
        for window in Window:
            fits[window.value] = _try_fit(profile, window, RadiusConvention.AT_R)
        fits[f"{Window.INTERVAL.value}_28R"] = _try_fit(profile, Window.INTERVAL, RadiusConvention.AT_28R)
        try:
            power = fit_decay_power(profile)
        except InsufficientDataError as e:
            logger.warning(f"No decay power fit: {e.message}")
    interval_fit = fits.get(Window.INTERVAL.value)
    a0_form = A0_FACTOR * interval_fit.c1_fit if interval_fit is not None else None

    certificate = boundary_certificate(u1, u2, v)
    if max(certificate.u1_max, certificate.u2_max) > 1e-10:
        logger.warning(f"Boundary magnitude {max(certificate.u1_max, certificate.u2_max):.3e}: "
                       "the torus is too small for the decay surrogate")
    logger.info(f"Uniqueness contrast: verdict {verdict.value}, max|v| = {max_abs_v:.3e}")
    return UniquenessReport(
        seed=cfg.seed,
        grid=grid,
        dt=u1.dt,
        t_end=cfg.t_end,
        verdict=verdict,
        max_abs_v=max_abs_v,
        profile=profile,
        fits=fits,
        power_fit=power,
        a0_form=a0_form,
        core_mass=core_mass(v, cfg.time_margin),
        endpoint_weighted_norms=endpoint_weighted_norms(v, cfg.probe_a),
        boundary_certificate=certificate,
    )
