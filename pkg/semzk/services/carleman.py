"""
Carleman weight, smooth cutoffs and quadrature evaluation of weighted inequalities.

All functions here act on closed-form test functions: derivatives are analytic,
space is integrated with the trapezoid rule over the support box and time with
composite Simpson.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pydantic
from scipy.integrate import simpson, trapezoid
from scipy.interpolate import CubicHermiteSpline

from semzk.models.carleman import (
    CarlemanParams,
    CarlemanRadiusReport,
    CarlemanReport,
    CarlemanSample,
    CommutatorReport,
    CommutatorSample,
    CutoffSet,
    InterpolationReport,
    InterpolationResult,
    LowerOrderTerms,
    PersistenceReport,
    PersistenceResult,
    ProfileKind,
    RadiusPeak,
    Representation,
    SecondPersistenceData,
    TestFunction,
    WeightRegionBounds,
)
from semzk.models.grid import Field, Grid2D, Multiplier
from semzk.services.spectral_core import apply_symbol, l2_norm
from semzk.utils.config import get_settings
from semzk.utils.error_handlers import (
    DomainError,
    NonCompactSupportError,
    OverflowGuardError,
    SupportViolationError,
    ValidationError,
    from_pydantic,
)
from semzk.utils.logger import LogPerformance
from semzk.utils.performance_monitor import performance_monitor

logger = logging.getLogger(__name__)

Coefficient = Union[float, Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]]

_BUMP_GAP = 1e-8
_RAMP_NODES = 2049
_PROFILE_SAMPLES = 20001
DEFAULT_NODES = (48, 48, 65)
PERSISTENCE_NODES = (64, 64, 129)


# ---------------------------------------------------------------------------
# Bump and ramp
# ---------------------------------------------------------------------------

def bump(s) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """exp(-1/(1-s^2)) on (-1, 1) and its first three derivatives."""
    s = np.asarray(s, dtype=np.float64)
    gap = 1.0 - s * s
    inside = gap > _BUMP_GAP
    g = np.where(inside, gap, 1.0)
    h1 = -2.0 * s / g ** 2
    h2 = (-2.0 - 6.0 * s * s) / g ** 3
    h3 = -24.0 * s * (1.0 + s * s) / g ** 4
    b = np.where(inside, np.exp(-1.0 / g), 0.0)
    return b, h1 * b, (h2 + h1 ** 2) * b, (h3 + 3.0 * h1 * h2 + h1 ** 3) * b


@lru_cache(maxsize=1)
def _ramp_table() -> Tuple[CubicHermiteSpline, float]:
    nodes = np.linspace(-1.0, 1.0, _RAMP_NODES)
    gl_x, gl_w = np.polynomial.legendre.leggauss(8)
    mid = 0.5 * (nodes[:-1] + nodes[1:])
    half = 0.5 * (nodes[1:] - nodes[:-1])
    pieces = (bump(mid[:, None] + half[:, None] * gl_x[None, :])[0] * gl_w[None, :]).sum(axis=1) * half
    cumulative = np.concatenate([[0.0], np.cumsum(pieces)])
    total = float(cumulative[-1])
    spline = CubicHermiteSpline(nodes, cumulative / total, bump(nodes)[0] / total)
    return spline, total


def ramp(s) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Monotone C-infinity ramp S: 0 for s <= 0, 1 for s >= 1; returns (S, S', S'')."""
    s = np.asarray(s, dtype=np.float64)
    spline, total = _ramp_table()
    u = 2.0 * s - 1.0
    b, b1, _, _ = bump(u)
    inner = (s > 0.0) & (s < 1.0)
    value = np.where(s >= 1.0, 1.0, 0.0)
    value = np.where(inner, spline(np.clip(u, -1.0, 1.0)), value)
    return value, 2.0 * b / total, 4.0 * b1 / total


# ---------------------------------------------------------------------------
# Time profile and weight
# ---------------------------------------------------------------------------

def time_profile(r: float, t) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """phi(t), phi'(t), phi''(t): 0 on [0, r/2] and [1 - r/2, 1], 4 on [r, 1 - r]."""
    if not 0 < r < 0.5:
        raise ValidationError(f"r must lie in (0, 1/2), got {r}")
    t = np.asarray(t, dtype=np.float64)
    scale = 2.0 / r
    a, a1, a2 = ramp((t - r / 2.0) * scale)
    b, b1, b2 = ramp((1.0 - r / 2.0 - t) * scale)
    a1, a2 = a1 * scale, a2 * scale ** 2
    b1, b2 = -b1 * scale, b2 * scale ** 2
    return 4.0 * a * b, 4.0 * (a1 * b + a * b1), 4.0 * (a2 * b + 2.0 * a1 * b1 + a * b2)


@lru_cache(maxsize=32)
def profile_cbar(r: float) -> float:
    """max(|phi'|_inf, |phi''|_inf, 1) on a dense grid of [0, 1]."""
    t = np.linspace(0.0, 1.0, _PROFILE_SAMPLES)
    _, d1, d2 = time_profile(r, t)
    return float(max(np.max(np.abs(d1)), np.max(np.abs(d2)), 1.0))


def make_params(R: float, alpha: Optional[float] = None, r: float = 0.25, factor: float = 1.0) -> CarlemanParams:
    """Carleman parameters; alpha defaults to factor * cbar * R**1.5."""
    try:
        if alpha is None:
            return CarlemanParams.admissible(R, r=r, factor=factor)
        return CarlemanParams(R=R, alpha=alpha, r=r, cbar=profile_cbar(r))
    except pydantic.ValidationError as exc:
        raise from_pydantic(exc, "carleman parameters")


@dataclass(frozen=True)
class WeightValues:
    """phi and the partials of psi = alpha * phi."""
    phi: np.ndarray
    psi_x: np.ndarray
    psi_y: np.ndarray
    psi_t: np.ndarray
    psi_xx: np.ndarray
    psi_yy: np.ndarray
    psi_xt: np.ndarray
    psi_tt: np.ndarray


def weight_phi(params: CarlemanParams, x, y, t) -> WeightValues:
    """phi = (x/R + phi(t))^2 + y^2/R^2 with the closed-form partials of alpha * phi."""
    x, y, t = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (x, y, t)))
    R, alpha = params.R, params.alpha
    ph, d1, d2 = time_profile(params.r, t)
    shift = x / R + ph
    constant = np.full(x.shape, 2.0 * alpha / R ** 2)
    return WeightValues(
        phi=shift ** 2 + (y / R) ** 2,
        psi_x=2.0 * alpha * shift / R,
        psi_y=2.0 * alpha * y / R ** 2,
        psi_t=2.0 * alpha * shift * d1,
        psi_xx=constant,
        psi_yy=constant.copy(),
        psi_xt=2.0 * alpha * d1 / R,
        psi_tt=2.0 * alpha * shift * d2 + 2.0 * alpha * d1 ** 2,
    )


# ---------------------------------------------------------------------------
# Cutoffs
# ---------------------------------------------------------------------------

def cutoffs(R: float, N: Optional[float] = None, r: float = 0.25, require_upper: bool = False) -> CutoffSet:
    """Cutoff parameters; ``require_upper`` enforces N > 28R."""
    if require_upper and (N is None or N <= 28.0 * R):
        raise ValidationError(f"N must exceed 28R = {28.0 * R:g}, got {N}", details={"R": R, "N": N})
    if N is not None and N <= R + 1.0:
        raise ValidationError(f"N must exceed R + 1, got N={N}, R={R}")
    try:
        return CutoffSet(R=R, N=N, r=r)
    except pydantic.ValidationError as exc:
        raise from_pydantic(exc, "cutoffs")


def _radial(x, y) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    rho = np.hypot(x, y)
    safe = np.where(rho > 0, rho, 1.0)
    return rho, np.where(rho > 0, x / safe, 0.0), np.where(rho > 0, y / safe, 0.0)


def theta(c: CutoffSet, x, y) -> np.ndarray:
    """1 for rho <= R - 1, 0 for rho >= R."""
    rho, _, _ = _radial(x, y)
    return 1.0 - ramp(rho - (c.R - 1.0))[0]


def theta_gradient(c: CutoffSet, x, y) -> Tuple[np.ndarray, np.ndarray]:
    rho, ux, uy = _radial(x, y)
    d = -ramp(rho - (c.R - 1.0))[1]
    return d * ux, d * uy


def mu(s) -> np.ndarray:
    """0 on (-inf, 2], 1 on [3, inf)."""
    return ramp(np.asarray(s, dtype=np.float64) - 2.0)[0]


def mu_prime(s) -> np.ndarray:
    return ramp(np.asarray(s, dtype=np.float64) - 2.0)[1]


def _require_outer(c: CutoffSet) -> float:
    if c.N is None:
        raise ValidationError("phi_RN needs an outer radius N")
    return c.N


def phi_rn(c: CutoffSet, x, y) -> np.ndarray:
    """1 on [R + 1, N], supported in (R, N + 1)."""
    N = _require_outer(c)
    rho, _, _ = _radial(x, y)
    return ramp(rho - c.R)[0] * (1.0 - ramp(rho - N)[0])


def phi_rn_gradient(c: CutoffSet, x, y) -> Tuple[np.ndarray, np.ndarray]:
    N = _require_outer(c)
    rho, ux, uy = _radial(x, y)
    inner, inner_d, _ = ramp(rho - c.R)
    outer, outer_d, _ = ramp(rho - N)
    d = inner_d * (1.0 - outer) - inner * outer_d
    return d * ux, d * uy


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------

def profile_1d(kind: ProfileKind, s, sharpness: float = 4.0) -> Tuple[np.ndarray, ...]:
    """A 1D factor and its first three derivatives in s."""
    s = np.asarray(s, dtype=np.float64)
    if kind == ProfileKind.BUMP:
        return bump(s)
    k = sharpness
    g = np.exp(-k * s * s)
    gauss = (g, -2.0 * k * s * g, (4.0 * k * k * s * s - 2.0 * k) * g, (-8.0 * k ** 3 * s ** 3 + 12.0 * k * k * s) * g)
    if kind == ProfileKind.GAUSSIAN:
        return gauss
    b = bump(s)
    return (
        gauss[0] * b[0],
        gauss[1] * b[0] + gauss[0] * b[1],
        gauss[2] * b[0] + 2.0 * gauss[1] * b[1] + gauss[0] * b[2],
        gauss[3] * b[0] + 3.0 * gauss[2] * b[1] + 3.0 * gauss[1] * b[2] + gauss[0] * b[3],
    )


@dataclass(frozen=True)
class TestFunctionValues:
    __test__ = False

    f: np.ndarray
    fx: np.ndarray
    fy: np.ndarray
    ft: np.ndarray
    fxx: np.ndarray
    fxy: np.ndarray
    fyy: np.ndarray
    fxxx: np.ndarray
    fxyy: np.ndarray


def evaluate_test_function(g: TestFunction, x, y, t) -> TestFunctionValues:
    px = profile_1d(g.x_profile, (np.asarray(x, dtype=np.float64) - g.x0) / g.wx, g.sharpness)
    py = profile_1d(g.y_profile, (np.asarray(y, dtype=np.float64) - g.y0) / g.wy, g.sharpness)
    pt = profile_1d(g.t_profile, (np.asarray(t, dtype=np.float64) - g.t0) / g.wt, g.sharpness)
    X = [px[k] / g.wx ** k for k in range(4)]
    Y = [py[k] / g.wy ** k for k in range(3)]
    T0, T1 = g.amplitude * pt[0], g.amplitude * pt[1] / g.wt
    return TestFunctionValues(
        f=X[0] * Y[0] * T0,
        fx=X[1] * Y[0] * T0,
        fy=X[0] * Y[1] * T0,
        ft=X[0] * Y[0] * T1,
        fxx=X[2] * Y[0] * T0,
        fxy=X[1] * Y[1] * T0,
        fyy=X[0] * Y[2] * T0,
        fxxx=X[3] * Y[0] * T0,
        fxyy=X[1] * Y[2] * T0,
    )


def check_support(g: TestFunction, params: CarlemanParams, samples: int = 65) -> None:
    """Require |x/R + phi(t)| >= 1 over the support box."""
    (x0, x1), _, (t0, t1) = g.support_box()
    xs = np.linspace(x0, x1, samples)
    ts = np.linspace(max(t0, 0.0), min(t1, 1.0), samples)
    T, X = np.meshgrid(ts, xs, indexing="ij")
    value = np.abs(X / params.R + time_profile(params.r, T)[0])
    k = np.unravel_index(int(np.argmin(value)), value.shape)
    if value[k] < 1.0 - 1e-9:
        x_bad, t_bad = float(X[k]), float(T[k])
        raise SupportViolationError(
            f"support violation at x={x_bad:.6g}, t={t_bad:.6g}: |x/R + phi(t)| = {float(value[k]):.6g}",
            details={"x": x_bad, "t": t_bad, "value": float(value[k])},
        )


def sample_admissible_test_functions(params: CarlemanParams, count: int, seed: int = 0) -> List[TestFunction]:
    """Compact test functions in R-scaled coordinates drawn from three admissible families.

    right: x/R >= 1; left: x/R <= -5; plateau: t within [r, 1 - r] and -3 <= x/R <= -1.
    Every draw consumes the same random numbers, so a seed gives R-scaled copies across R.
    """
    if count < 0:
        raise ValidationError(f"count must be >= 0, got {count}")
    rng = np.random.default_rng(seed)
    R, r = params.R, params.r
    compact = (ProfileKind.BUMP, ProfileKind.TRUNCATED_GAUSSIAN)
    families = ("right", "left", "plateau")
    out: List[TestFunction] = []
    for i in range(count):
        u = rng.random(9)
        family = families[i % 3]
        wx_s = 0.1 + 0.3 * u[0]
        wy_s = 0.1 + 0.3 * u[1]
        y0_s = -1.0 + 2.0 * u[2]
        if family == "plateau":
            wt_hi = min(0.3, 0.5 - r)
            wt = 0.05 + (wt_hi - 0.05) * u[3] if wt_hi > 0.05 else 0.5 * wt_hi
            t0 = r + wt + (1.0 - 2.0 * r - 2.0 * wt) * u[4]
            x0_s = -3.0 + wx_s + (1.5 - wx_s) * u[5]
        else:
            wt = 0.05 + 0.25 * u[3]
            t0 = wt + (1.0 - 2.0 * wt) * u[4]
            if family == "right":
                x0_s = 1.0 + wx_s + (1.5 - wx_s) * u[5]
            else:
                x0_s = -6.5 + (1.5 - wx_s) * u[5]
        out.append(TestFunction(
            x0=R * x0_s, y0=R * y0_s, t0=t0,
            wx=R * wx_s, wy=R * wy_s, wt=wt,
            x_profile=compact[int(u[6] * 2)],
            y_profile=compact[int(u[7] * 2)],
            t_profile=ProfileKind.BUMP,
            sharpness=1.0 + 3.0 * u[8],
            family=family,
        ))
    return out


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Nodes:
    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    T: np.ndarray


def _box_nodes(g: TestFunction, counts: Sequence[int], t_range: Optional[Tuple[float, float]] = None) -> _Nodes:
    nx, ny, nt = counts
    if nt % 2 == 0:
        nt += 1
    (x0, x1), (y0, y1), (t0, t1) = g.support_box()
    if t_range is None:
        t_range = (max(t0, 0.0), min(t1, 1.0))
    x = np.linspace(x0, x1, nx)
    y = np.linspace(y0, y1, ny)
    t = np.linspace(t_range[0], t_range[1], nt)
    T, Y, X = np.meshgrid(t, y, x, indexing="ij")
    return _Nodes(x=x, y=y, t=t, X=X, Y=Y, T=T)


def _space_integral(values: np.ndarray, nodes: _Nodes) -> np.ndarray:
    return trapezoid(trapezoid(values, x=nodes.x, axis=-1), x=nodes.y, axis=-1)


def _integrate(values: np.ndarray, nodes: _Nodes) -> float:
    return float(simpson(_space_integral(values, nodes), x=nodes.t))


def _norm(values: np.ndarray, nodes: _Nodes) -> float:
    return float(np.sqrt(max(_integrate(values ** 2, nodes), 0.0)))


def _coefficient(value: Coefficient, nodes: _Nodes) -> np.ndarray:
    if callable(value):
        return np.broadcast_to(np.asarray(value(nodes.X, nodes.Y, nodes.T), dtype=np.float64), nodes.X.shape)
    return np.full(nodes.X.shape, float(value))


def _lower_order(coeffs: Union[None, LowerOrderTerms, Mapping[str, Coefficient]], nodes: _Nodes):
    if coeffs is None:
        return None
    if isinstance(coeffs, LowerOrderTerms):
        coeffs = coeffs.model_dump()
    unknown = set(coeffs) - {"a1", "b1", "c0"}
    if unknown:
        raise ValidationError(f"unknown lower-order coefficients: {sorted(unknown)}")
    return tuple(_coefficient(coeffs.get(name, 0.0), nodes) for name in ("a1", "b1", "c0"))


def _conjugated_operator(F: TestFunctionValues, W: WeightValues, lower=None) -> np.ndarray:
    """e^psi (d_t + d_x^3 + d_x d_y^2 [+ a1 d_x + b1 d_y + c0]) e^-psi applied to f."""
    f = F.f
    px, py, pxx, pyy = W.psi_x, W.psi_y, W.psi_xx, W.psi_yy
    out = F.ft - W.psi_t * f
    out = out + F.fxxx - 3.0 * px * F.fxx + (3.0 * px ** 2 - 3.0 * pxx) * F.fx + 3.0 * px * pxx * f - px ** 3 * f
    out = out + (F.fxyy - 2.0 * py * F.fxy + (py ** 2 - pyy) * F.fx - px * F.fyy
                 + 2.0 * px * py * F.fy + px * pyy * f - px * py ** 2 * f)
    if lower is not None:
        a1, b1, c0 = lower
        out = out + a1 * (F.fx - px * f) + b1 * (F.fy - py * f) + c0 * f
    return out


def _direct_operator(G: TestFunctionValues, lower=None) -> np.ndarray:
    out = G.ft + G.fxxx + G.fxyy
    if lower is not None:
        a1, b1, c0 = lower
        out = out + a1 * G.fx + b1 * G.fy + c0 * G.f
    return out


def _weighted_norm(psi: np.ndarray, values: np.ndarray, nodes: _Nodes) -> float:
    """||e^psi h|| with the integrand formed as exp(2 psi + log h^2)."""
    cap = get_settings().exponent_cap
    nonzero = values != 0
    if not np.any(nonzero):
        return 0.0
    exponent = np.full(values.shape, -np.inf)
    exponent[nonzero] = 2.0 * psi[nonzero] + np.log(values[nonzero] ** 2)
    peak = float(np.max(exponent))
    if peak > cap:
        raise OverflowGuardError(
            f"weighted integrand exponent {peak:.6g} exceeds cap {cap:g}",
            details={"max_exponent": peak, "cap": cap},
        )
    return float(np.sqrt(max(_integrate(np.exp(exponent), nodes), 0.0)))


def _require_compact(g: TestFunction) -> None:
    if not (g.spatially_compact and g.time_compact):
        raise NonCompactSupportError("Carleman test functions must be compactly supported in x, y and t")
    (_, _, (t0, t1)) = g.support_box()
    if t0 < 0.0 or t1 > 1.0:
        raise SupportViolationError(
            f"time support [{t0:.6g}, {t1:.6g}] leaves [0, 1]", details={"t_min": t0, "t_max": t1}
        )


# ---------------------------------------------------------------------------
# Carleman estimate
# ---------------------------------------------------------------------------

def carleman_sides(g: TestFunction, params: CarlemanParams,
                   coeffs: Union[None, LowerOrderTerms, Mapping[str, Coefficient]] = None,
                   representation: Union[Representation, str] = Representation.CONJUGATED,
                   nodes: Sequence[int] = DEFAULT_NODES) -> Tuple[float, float]:
    """Both sides of the Carleman estimate for one test function.

    lhs = a^{5/2}/R^3 ||e^psi g|| + a^{3/2}/R^2 (||e^psi g_x|| + ||e^psi g_y||)
    rhs = ||e^psi (d_t + d_x^3 + d_x d_y^2 [+ lower order]) g||

    In the conjugated representation the separable function is f = e^psi g,
    so no exponential is ever formed.
    """
    representation = Representation(representation)
    if g.amplitude == 0:
        return 0.0, 0.0
    _require_compact(g)
    check_support(g, params)

    grid = _box_nodes(g, nodes)
    F = evaluate_test_function(g, grid.X, grid.Y, grid.T)
    W = weight_phi(params, grid.X, grid.Y, grid.T)
    lower = _lower_order(coeffs, grid)
    R, alpha = params.R, params.alpha
    c0, c1 = alpha ** 2.5 / R ** 3, alpha ** 1.5 / R ** 2

    if representation == Representation.CONJUGATED:
        lhs = c0 * _norm(F.f, grid) + c1 * (_norm(F.fx - W.psi_x * F.f, grid) + _norm(F.fy - W.psi_y * F.f, grid))
        rhs = _norm(_conjugated_operator(F, W, lower), grid)
    else:
        psi = alpha * W.phi
        lhs = c0 * _weighted_norm(psi, F.f, grid) + c1 * (
            _weighted_norm(psi, F.fx, grid) + _weighted_norm(psi, F.fy, grid)
        )
        rhs = _weighted_norm(psi, _direct_operator(F, lower), grid)
    return float(lhs), float(rhs)


@performance_monitor.measure_time("carleman_sweep")
def carleman_sweep(params: CarlemanParams, count: int = 100, seed: int = 0,
                   representation: Union[Representation, str] = Representation.CONJUGATED,
                   coeffs: Optional[LowerOrderTerms] = None, workers: int = 1,
                   nodes: Sequence[int] = DEFAULT_NODES) -> CarlemanReport:
    """Evaluate the Carleman ratio over sampled admissible test functions."""
    representation = Representation(representation)
    functions = sample_admissible_test_functions(params, count, seed)

    def evaluate(item):
        index, g = item
        lhs, rhs = carleman_sides(g, params, coeffs=coeffs, representation=representation, nodes=nodes)
        ratio = lhs / rhs if rhs > 0 else 0.0
        return CarlemanSample(index=index, lhs=lhs, rhs=rhs, ratio=ratio,
                              scaled_ratio=float(np.sqrt(params.alpha) * ratio), test_function=g)

    with LogPerformance("carleman_sweep", R=params.R, alpha=params.alpha, count=count):
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            samples = list(pool.map(evaluate, enumerate(functions)))

    max_ratio = max((s.ratio for s in samples), default=0.0)
    max_scaled = max((s.scaled_ratio for s in samples), default=0.0)
    logger.info(f"Carleman sweep R={params.R:g}: max ratio {max_ratio:.6g}, scaled {max_scaled:.6g}")
    return CarlemanReport(seed=seed, params=params, representation=representation, samples=samples,
                          max_ratio=max_ratio, max_scaled_ratio=max_scaled)


def carleman_radius_sweep(radii: Sequence[float], count: int = 100, seed: int = 0, r: float = 0.25,
                          factor: float = 2.0, workers: int = 1,
                          representation: Union[Representation, str] = Representation.CONJUGATED,
                          coeffs: Optional[LowerOrderTerms] = None) -> CarlemanRadiusReport:
    """Raw and sqrt(alpha)-scaled peak ratios at alpha = cbar * R**1.5 for each radius."""
    if not radii:
        raise ValidationError("at least one radius is required")
    peaks = []
    for R in sorted(radii):
        report = carleman_sweep(make_params(R, r=r), count=count, seed=seed, representation=representation,
                                coeffs=coeffs, workers=workers)
        peaks.append(RadiusPeak(R=R, alpha=report.params.alpha, max_ratio=report.max_ratio,
                                max_scaled_ratio=report.max_scaled_ratio))

    def spread(values):
        low = min(values)
        return float(max(values) / low) if low > 0 else float("inf")

    raw = [p.max_ratio for p in peaks]
    raw_spread = spread(raw)
    scaled_spread = spread([p.max_scaled_ratio for p in peaks])
    logger.info(f"Carleman radii {[p.R for p in peaks]}: raw spread {raw_spread:.4g}, scaled {scaled_spread:.4g}")
    return CarlemanRadiusReport(
        seed=seed,
        peaks=peaks,
        factor=factor,
        raw_spread=raw_spread,
        scaled_spread=scaled_spread,
        bounded=all(0 < v <= factor * raw[0] for v in raw),
        raw_stable=raw_spread <= factor,
        scaled_stable=scaled_spread <= factor,
    )


# ---------------------------------------------------------------------------
# Commutator
# ---------------------------------------------------------------------------

def _commutator_integrand(F: TestFunctionValues, W: WeightValues) -> np.ndarray:
    px, py, pxx, pyy, pxt, ptt = W.psi_x, W.psi_y, W.psi_xx, W.psi_yy, W.psi_xt, W.psi_tt
    px2, py2 = px ** 2, py ** 2
    zero_order = (9.0 * px2 ** 2 * pxx - 3.0 * pxx ** 3 + 6.0 * pxt * px2 + ptt
                  + 6.0 * px2 * py2 * pxx + 2.0 * pxt * py2 + 4.0 * px2 * py2 * pyy
                  + py2 ** 2 * pxx + pxx * pyy ** 2 - 6.0 * pxx ** 2 * pyy)
    return (zero_order * F.f ** 2
            + (18.0 * px2 * pxx - 6.0 * pxt - 6.0 * py2 * pxx + 4.0 * pyy * py2) * F.fx ** 2
            + (2.0 * py2 * pxx - 6.0 * px2 * pxx - 2.0 * pxt + 4.0 * px2 * pyy) * F.fy ** 2
            + 24.0 * px * py * pxx * F.fx * F.fy
            + (4.0 * pyy + 6.0 * pxx) * F.fxy ** 2
            + 9.0 * pxx * F.fxx ** 2
            + pxx * F.fyy ** 2)


def _commutator_parts(f: TestFunction, params: CarlemanParams, nodes: Sequence[int]) -> Tuple[float, float, float]:
    grid = _box_nodes(f, nodes)
    F = evaluate_test_function(f, grid.X, grid.Y, grid.T)
    W = weight_phi(params, grid.X, grid.Y, grid.T)
    R, alpha = params.R, params.alpha
    quadratic_form = _integrate(_commutator_integrand(F, W), grid)
    lower_bound = (134.0 * alpha ** 5 / R ** 6 * _integrate(F.f ** 2, grid)
                   + 4.0 * alpha ** 3 / R ** 4 * (_integrate((F.fx - W.psi_x * F.f) ** 2, grid)
                                                 + _integrate((F.fy - W.psi_y * F.f) ** 2, grid)))
    full = _integrate(_conjugated_operator(F, W) ** 2, grid)
    return quadratic_form, lower_bound, full


def commutator_form(f: TestFunction, params: CarlemanParams,
                    nodes: Sequence[int] = DEFAULT_NODES) -> Tuple[float, float]:
    """(<[S, A] f, f>, 134 a^5/R^6 ||f||^2 + 4 a^3/R^4 (||(d_x - psi_x) f||^2 + ||(d_y - psi_y) f||^2))."""
    if f.amplitude == 0:
        return 0.0, 0.0
    _require_compact(f)
    check_support(f, params)
    quadratic_form, lower_bound, _ = _commutator_parts(f, params, nodes)
    return quadratic_form, lower_bound


def _relative_residual(lhs: np.ndarray, rhs: np.ndarray) -> float:
    scale = float(np.max(np.abs(lhs)))
    if scale == 0.0:
        return float(np.max(np.abs(rhs)))
    return float(np.max(np.abs(lhs - rhs)) / scale)


def completion_identities(f: TestFunction, params: CarlemanParams,
                          nodes: Sequence[int] = (24, 24, 17)) -> Dict[str, float]:
    """Pointwise relative residuals of the square completions used in the lower bound."""
    grid = _box_nodes(f, nodes)
    F = evaluate_test_function(f, grid.X, grid.Y, grid.T)
    W = weight_phi(params, grid.X, grid.Y, grid.T)
    px, py = W.psi_x, W.psi_y

    a, b = px * py * F.f, F.fxy
    A, B = px * F.fx, py * F.fy
    return {
        "mixed_second_order": _relative_residual(
            10 * a ** 2 - 16 * a * b + 10 * b ** 2, (8.0 / 3.0 * a - 3 * b) ** 2 + 26.0 / 9.0 * a ** 2 + b ** 2),
        "first_order": _relative_residual(
            18 * A ** 2 + 8 * A * B + 2 * B ** 2, (4 * A + B) ** 2 + 2 * A ** 2 + B ** 2),
        "fxx": _relative_residual(
            py ** 4 * F.f ** 2 + 2 * py ** 2 * F.f * F.fxx + 9 * F.fxx ** 2,
            (py ** 2 * F.f + F.fxx) ** 2 + 8 * F.fxx ** 2),
        "fyy": _relative_residual(
            9 * px ** 4 * F.f ** 2 + 3 * px ** 2 * F.f * F.fyy + F.fyy ** 2,
            (1.5 * px ** 2 * F.f + F.fyy) ** 2 + 6.75 * px ** 4 * F.f ** 2),
    }


def weight_region_bounds(params: CarlemanParams, samples: int = 20000, seed: int = 0) -> WeightRegionBounds:
    """Largest phi on the annulus {R-1 <= rho <= R} x [0, 1] and on {2 <= |x/R + phi(t)| <= 3, rho <= R}."""
    rng = np.random.default_rng(seed)
    R = params.R
    angle = rng.uniform(0.0, 2 * np.pi, samples)
    rho = np.sqrt(rng.uniform((R - 1.0) ** 2, R ** 2, samples))
    t = rng.uniform(0.0, 1.0, samples)
    interior = weight_phi(params, rho * np.cos(angle), rho * np.sin(angle), t).phi

    angle = rng.uniform(0.0, 2 * np.pi, samples)
    rho = R * np.sqrt(rng.uniform(0.0, 1.0, samples))
    t = rng.uniform(0.0, 1.0, samples)
    x, y = rho * np.cos(angle), rho * np.sin(angle)
    shift = np.abs(x / R + time_profile(params.r, t)[0])
    keep = (shift >= 2.0) & (shift <= 3.0)
    transition = weight_phi(params, x[keep], y[keep], t[keep]).phi

    return WeightRegionBounds(
        interior_max_phi=float(np.max(interior)) if interior.size else 0.0,
        transition_max_phi=float(np.max(transition)) if transition.size else 0.0,
        interior_samples=int(interior.size),
        transition_samples=int(transition.size),
    )


@performance_monitor.measure_time("commutator_check")
def commutator_check(params: CarlemanParams, count: int = 20, seed: int = 0, workers: int = 1,
                     nodes: Sequence[int] = DEFAULT_NODES) -> CommutatorReport:
    """Compare the commutator form with its lower bound over sampled admissible test functions."""
    tolerance = get_settings().commutator_tolerance
    functions = sample_admissible_test_functions(params, count, seed)

    def evaluate(item):
        index, f = item
        check_support(f, params)
        quadratic_form, lower_bound, full = _commutator_parts(f, params, nodes)
        scale = abs(quadratic_form) or 1.0
        return CommutatorSample(
            index=index,
            quadratic_form=quadratic_form,
            lower_bound=lower_bound,
            margin=(quadratic_form - lower_bound) / scale,
            holds=quadratic_form >= lower_bound - tolerance * scale,
            upper_consistency=quadratic_form <= full * (1.0 + tolerance),
            completion_residuals=completion_identities(f, params),
            test_function=f,
        )

    with LogPerformance("commutator_check", R=params.R, count=count):
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            samples = list(pool.map(evaluate, enumerate(functions)))
        bounds = weight_region_bounds(params, seed=seed)

    all_hold = all(s.holds and s.upper_consistency for s in samples) and bounds.holds
    if not all_hold:
        logger.warning(f"Commutator check R={params.R:g}: lower bound violated or region bound exceeded")
    return CommutatorReport(seed=seed, params=params, samples=samples, all_hold=all_hold, region_bounds=bounds)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def _smooth_abs(v: np.ndarray, sigma: float) -> np.ndarray:
    return np.sqrt(v * v + sigma * sigma)


def _guard_exponent(exponent: np.ndarray, what: str) -> None:
    cap = get_settings().exponent_cap
    peak = float(np.max(exponent))
    if peak > cap:
        raise OverflowGuardError(f"{what} exponent {peak:.6g} exceeds cap {cap:g}",
                                 details={"max_exponent": peak, "cap": cap})


def _j3_norm(w: TestFunction, t: float, lam: float, beta: float, sigma: float, n: int = 64) -> float:
    (x0, x1), (y0, y1), _ = w.support_box()
    grid = Grid2D(nx=n, ny=n, lx=2.0 * (x1 - x0), ly=2.0 * (y1 - y0))
    xg, yg = grid.mesh()
    xs, ys = xg + 0.5 * (x0 + x1), yg + 0.5 * (y0 + y1)
    exponent = lam * _smooth_abs(xs, sigma) + beta * _smooth_abs(ys, sigma)
    _guard_exponent(exponent, "persistence weight")
    values = np.exp(exponent) * evaluate_test_function(w, xs, ys, t).f
    return l2_norm(apply_symbol(grid, values, Multiplier.bessel(3.0)), grid)


def persistence_sides(w: TestFunction, lam: float, beta: float, sigma: Optional[float] = None,
                      nodes: Sequence[int] = PERSISTENCE_NODES) -> PersistenceResult:
    """Sides of sup_t ||E w(t)|| <= ||E w(0)|| + ||E w(1)|| + int ||E (d_t + d_x^3 + d_x d_y^2) w||,
    with E = exp(lam |x| + beta |y|) and |.| smoothed at scale sigma."""
    if lam <= 0 or beta <= 0:
        raise ValidationError(f"lambda and beta must be positive, got {lam}, {beta}")
    if not w.spatially_compact:
        raise NonCompactSupportError("persistence needs a spatially compact function")

    grid = _box_nodes(w, nodes, t_range=(0.0, 1.0))
    if sigma is None:
        sigma = float(grid.x[1] - grid.x[0])
    if w.amplitude == 0:
        return PersistenceResult(lam=lam, beta=beta, lhs=0.0, rhs=0.0, ratio=0.0, holds=True, sigma=sigma)

    X2, Y2 = np.meshgrid(grid.x, grid.y, indexing="xy")
    exponent = lam * _smooth_abs(X2, sigma) + beta * _smooth_abs(Y2, sigma)
    _guard_exponent(exponent, "persistence weight")
    E = np.exp(exponent)[None, :, :]

    F = evaluate_test_function(w, grid.X, grid.Y, grid.T)
    def slice_norm(v: np.ndarray) -> np.ndarray:
        return np.sqrt(np.maximum(_space_integral((E * v) ** 2, grid), 0.0))

    data_norms = slice_norm(F.f)
    operator_norms = slice_norm(F.ft + F.fxxx + F.fxyy)
    operator_term = float(simpson(operator_norms, x=grid.t))
    lhs = float(np.max(data_norms))
    rhs = float(data_norms[0] + data_norms[-1] + operator_term)

    second = None
    if beta >= 1.0 and lam >= 7.0 * beta:
        lhs_quadrature = sum(_norm(E * v, grid) for v in (F.f, F.fx, F.fy, F.fxx, F.fxy, F.fyy))
        second = SecondPersistenceData(
            lhs_quadrature=float(lhs_quadrature),
            j3_initial=_j3_norm(w, 0.0, lam, beta, sigma),
            j3_final=_j3_norm(w, 1.0, lam, beta, sigma),
            operator_term=operator_term,
        )
    return PersistenceResult(lam=lam, beta=beta, lhs=lhs, rhs=rhs, ratio=lhs / rhs if rhs > 0 else 0.0,
                             holds=bool(lhs <= rhs), sigma=sigma, second_estimate=second)


def persistence_check(w: TestFunction, pairs: Sequence[Tuple[float, float]], seed: Optional[int] = None,
                      sigma: Optional[float] = None) -> PersistenceReport:
    results = [persistence_sides(w, lam, beta, sigma=sigma) for lam, beta in pairs]
    slack = get_settings().norm_slack
    all_hold = all(r.holds for r in results)
    if not all_hold:
        failing = [(r.lam, r.beta) for r in results if not r.holds]
        logger.warning(f"Persistence inequality fails for (lambda, beta) in {failing}")
    return PersistenceReport(seed=seed, results=results, all_hold=all_hold, slack=slack,
                             all_hold_within_slack=all(r.lhs <= r.rhs * (1.0 + slack) for r in results))


# ---------------------------------------------------------------------------
# Interpolation
# ---------------------------------------------------------------------------

def _check_decay(data: np.ndarray, what: str = "field") -> float:
    settings = get_settings()
    band = settings.boundary_band
    data = np.abs(data)
    peak = float(np.max(data))
    edge = max(np.max(data[:band, :]), np.max(data[-band:, :]), np.max(data[:, :band]), np.max(data[:, -band:]))
    if peak > 0 and edge > settings.decay_floor * peak:
        raise DomainError(
            f"{what} has not decayed at the torus boundary: {edge:.3e} relative to peak {peak:.3e}",
            details={"boundary_max": float(edge), "peak": peak, "decay_floor": settings.decay_floor, "what": what},
        )
    return peak


def interpolation_sides(f: Field, theta: float, beta: float, k: int,
                        sigma: Optional[float] = None, label: str = "") -> InterpolationResult:
    """||J^{theta k}(e^{(1-theta) beta(|x|+|y|)} f)|| against ||J^k f||^theta ||e^{beta(|x|+|y|)} f||^{1-theta}."""
    if not 0.0 <= theta <= 1.0:
        raise ValidationError(f"theta must lie in [0, 1], got {theta}")
    if beta <= 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    if k not in (1, 2, 3, 4):
        raise ValidationError(f"k must be in 1..4, got {k}")

    grid = f.grid
    peak = _check_decay(f.data)
    if peak == 0.0:
        return InterpolationResult(theta=theta, beta=beta, k=k, lhs=0.0, rhs_product=0.0, ratio=0.0, label=label)

    sigma = grid.dx if sigma is None else sigma
    x, y = grid.mesh()
    distance = _smooth_abs(x, sigma) + _smooth_abs(y, sigma)
    _guard_exponent(beta * distance, "interpolation weight")

    partial_scale = (1.0 - theta) * beta
    weighted = np.exp(beta * distance) * f.data
    _check_decay(weighted, "weighted field")
    partial = np.exp(partial_scale * distance) * f.data
    order = theta * k
    if order == 0:
        lhs = l2_norm(partial, grid)
    else:
        lhs = l2_norm(apply_symbol(grid, partial, Multiplier.bessel(order)), grid)
    jk = l2_norm(apply_symbol(grid, f.data, Multiplier.bessel(float(k))), grid)
    rhs = jk ** theta * l2_norm(weighted, grid) ** (1.0 - theta)
    return InterpolationResult(theta=theta, beta=beta, k=k, lhs=lhs, rhs_product=rhs,
                               ratio=lhs / rhs if rhs > 0 else 0.0, label=label)


def interpolation_check(f: Field, thetas: Sequence[float], beta: float, k: int,
                        seed: Optional[int] = None) -> InterpolationReport:
    results = [interpolation_sides(f, th, beta, k) for th in thetas]
    interior = [r.ratio for r in results if 0.0 < r.theta < 1.0]
    return InterpolationReport(seed=seed, grid=f.grid.identifier, results=results,
                               max_interior_ratio=max(interior, default=0.0))
