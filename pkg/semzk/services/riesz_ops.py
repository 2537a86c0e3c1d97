"""
Riesz transforms, the non-local SEM operators, A_p constants and operator-norm searches.

The non-local operators are compositions of Riesz transforms:
``dx L = -Rx Rx`` and ``dy L = -Rx Ry`` with ``L = inverse_laplacian * dx``.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from semzk.models.carleman import CarlemanParams, CutoffSet
from semzk.models.grid import Field, Grid2D, MultiplierKind
from semzk.models.riesz import (
    SEARCH_KINDS,
    ApEstimate,
    ApReport,
    Axis,
    BallFamily,
    BoundKind,
    NormEstimate,
    RieszReport,
    WeightedBoundReport,
    WeightedRatio,
    dyadic_balls,
)
from semzk.services import carleman as carleman_service
from semzk.services.spectral_core import apply_symbol, dealias_mask, fft2, ifft2_real, symbol
from semzk.utils.config import get_settings
from semzk.utils.error_handlers import ValidationError
from semzk.utils.logger import LogPerformance
from semzk.utils.performance_monitor import performance_monitor

logger = logging.getLogger(__name__)

_RIESZ = {Axis.X: MultiplierKind.RIESZ_X, Axis.Y: MultiplierKind.RIESZ_Y}
_NONLOCAL = {Axis.X: MultiplierKind.NONLOCAL_X, Axis.Y: MultiplierKind.NONLOCAL_Y}

# Window evaluations per chunk in the A_p sweep.
_CHUNK = 2_000_000


def riesz(f: Field, axis: Union[Axis, str]) -> Field:
    """Riesz transform along ``axis``."""
    return Field(grid=f.grid, data=apply_symbol(f.grid, f.data, _RIESZ[Axis(axis)]))


def nonlocal_operator(f: Field, kind: Union[Axis, str]) -> Field:
    """``dx L f`` (kind x) or ``dy L f`` (kind y); the output has zero mean."""
    return Field(grid=f.grid, data=apply_symbol(f.grid, f.data, _NONLOCAL[Axis(kind)]))


def riesz_identity_error(f: Field) -> float:
    """max |Rx Rx f + Ry Ry f + (f - mean f)|."""
    rx = riesz(riesz(f, Axis.X), Axis.X).data
    ry = riesz(riesz(f, Axis.Y), Axis.Y).data
    return float(np.max(np.abs(rx + ry + (f.data - np.mean(f.data)))))


def sharp_riesz_constant(p: float) -> float:
    """cot(pi / 2p*) with p* = max(p, p')."""
    if p <= 1:
        raise ValidationError(f"p must exceed 1, got {p}")
    p_star = max(p, p / (p - 1.0))
    return float(1.0 / np.tan(np.pi / (2.0 * p_star)))


# ---------------------------------------------------------------------------
# A_p constants
# ---------------------------------------------------------------------------

def _disk_stencil(grid: Grid2D, radius: float) -> Tuple[np.ndarray, np.ndarray, int, int]:
    rx = int(np.floor(radius / grid.dx + 1e-12))
    ry = int(np.floor(radius / grid.dy + 1e-12))
    di, dj = np.meshgrid(np.arange(-rx, rx + 1), np.arange(-ry, ry + 1), indexing="xy")
    inside = (di * grid.dx) ** 2 + (dj * grid.dy) ** 2 <= radius ** 2 * (1 + 1e-12)
    return di[inside], dj[inside], rx, ry


def ap_constant_log(log_w: Union[Field, np.ndarray], p: float, balls: BallFamily,
                    grid: Optional[Grid2D] = None) -> ApEstimate:
    """A_p constant of ``exp(log_w)`` over a ball family, evaluated in log space.

    Balls must lie inside the domain (no periodic wrap). Balls holding fewer
    than 4 grid points are skipped and counted.
    """
    if isinstance(log_w, Field):
        grid, lw = log_w.grid, log_w.data
    else:
        lw = np.asarray(log_w, dtype=np.float64)
    if grid is None:
        raise ValidationError("grid required for array weights")
    if not (1 < p < np.inf):
        raise ValidationError(f"p must lie in (1, inf), got {p}")
    if not np.all(np.isfinite(lw)):
        raise ValidationError("weight must be positive and finite")

    dual = -lw / (p - 1.0)
    best = (-np.inf, ((0.0, 0.0), 0.0))
    count = skipped = 0

    for radius in balls.radii:
        di, dj, rx, ry = _disk_stencil(grid, radius)
        if di.size < 4:
            skipped += 1
            continue
        cx = np.arange(rx, grid.nx - rx, balls.stride)
        cy = np.arange(ry, grid.ny - ry, balls.stride)
        if cx.size == 0 or cy.size == 0:
            continue
        ccx, ccy = np.meshgrid(cx, cy, indexing="xy")
        ccx, ccy = ccx.ravel(), ccy.ravel()
        log_n = np.log(di.size)
        per_chunk = max(1, _CHUNK // di.size)
        for start in range(0, ccx.size, per_chunk):
            ix = ccx[start:start + per_chunk, None] + di[None, :]
            iy = ccy[start:start + per_chunk, None] + dj[None, :]
            avg_w = logsumexp(lw[iy, ix], axis=1) - log_n
            avg_dual = logsumexp(dual[iy, ix], axis=1) - log_n
            log_q = avg_w + (p - 1.0) * avg_dual
            k = int(np.argmax(log_q))
            count += log_q.size
            if log_q[k] > best[0]:
                centre = (float(grid.x[ccx[start + k]]), float(grid.y[ccy[start + k]]))
                best = (float(log_q[k]), (centre, float(radius)))

    if count == 0:
        raise ValidationError("empty ball family: no ball fits inside the domain")

    log_q_value = max(best[0], 0.0)
    q_value = float(np.exp(log_q_value)) if log_q_value < 709.0 else float("inf")
    logger.debug(f"A_{p} estimate log Q = {log_q_value:.6g} over {count} balls ({skipped} radii skipped)")
    return ApEstimate(
        p=p,
        q_value=q_value,
        log_q_value=log_q_value,
        ball_count=count,
        skipped_balls=skipped,
        max_ball=best[1],
    )


def ap_constant(w: Field, p: float, balls: BallFamily) -> ApEstimate:
    """A_p constant of a positive weight."""
    if np.any(w.data <= 0):
        raise ValidationError("weight must be strictly positive")
    return ap_constant_log(np.log(w.data), p, balls, grid=w.grid)


def regularised_weight(grid: Grid2D, params: CarlemanParams, cutoffs: CutoffSet, t: float = 0.0,
                       epsilon: Optional[float] = None, delta: Optional[float] = None,
                       alpha: Optional[float] = None) -> np.ndarray:
    """Log of the regularised weight ``(exp(alpha*phi)*theta + eps) * (mu(x/R + phi(t)) + delta)``.

    ``alpha`` overrides ``params.alpha``; the weight itself needs no admissibility.
    """
    settings = get_settings()
    epsilon = settings.ap_epsilon if epsilon is None else epsilon
    delta = settings.ap_delta if delta is None else delta
    if epsilon <= 0 or delta <= 0:
        raise ValidationError("epsilon and delta must be positive")
    if alpha is not None and alpha <= 0:
        raise ValidationError(f"alpha must be positive, got {alpha}")

    x, y = grid.mesh()
    weight = carleman_service.weight_phi(params, x, y, t)
    theta = carleman_service.theta(cutoffs, x, y)
    shift = x / params.R + carleman_service.time_profile(params.r, t)[0]
    mu = carleman_service.mu(shift)
    with np.errstate(divide="ignore"):
        log_interior = (params.alpha if alpha is None else alpha) * weight.phi + np.log(theta)
    return np.logaddexp(log_interior, np.log(epsilon)) + np.log(mu + delta)


# ---------------------------------------------------------------------------
# Weighted bounds
# ---------------------------------------------------------------------------

def _log_weighted_l2(data: np.ndarray, log_w: np.ndarray) -> float:
    return 0.5 * float(logsumexp(log_w, b=data ** 2))


def reference_exponent(kind: MultiplierKind, p: float) -> float:
    """Power r = max(1, 1/(p-1)) of Q_p(w); doubled for the non-local compositions."""
    r = max(1.0, 1.0 / (p - 1.0))
    return 2.0 * r if kind in (MultiplierKind.NONLOCAL_X, MultiplierKind.NONLOCAL_Y) else r


def weighted_bound_check(kind: MultiplierKind, log_w: np.ndarray, grid: Grid2D, fields: int = 16,
                         budget: int = 32, seed: int = 0, log_q: Optional[float] = None,
                         balls: Optional[BallFamily] = None, tolerance: float = 1e-8,
                         workers: int = 1) -> WeightedBoundReport:
    """Ratios ||T f||_{L2(w)} / ||f||_{L2(w)} on seeded band-limited fields.

    A weighted operator-norm search runs on top of the sampled fields and its
    supremum is compared with Q_2(w)**r (Q_2(w)**2r for the non-local kinds).
    Ratios at most one are reported but not required off eigenfields.
    """
    kind = MultiplierKind(kind)
    if kind not in SEARCH_KINDS:
        raise ValidationError(f"weighted_bound_check does not support {kind.value}")
    if fields < 1:
        raise ValidationError(f"fields must be >= 1, got {fields}")
    log_w = np.asarray(log_w, dtype=np.float64)
    if log_w.shape != grid.shape or not np.all(np.isfinite(log_w)):
        raise ValidationError("log weight must be finite on the grid")

    if log_q is None:
        log_q = ap_constant_log(log_w, 2.0, balls or _default_balls(grid), grid=grid).log_q_value
    exponent = reference_exponent(kind, 2.0)
    log_reference = exponent * log_q

    ratios = []
    for i, seed_seq in enumerate(np.random.SeedSequence(seed).spawn(fields)):
        data = _random_band_limited(grid, seed_seq)
        log_ratio = _log_weighted_l2(apply_symbol(grid, data, kind), log_w) - _log_weighted_l2(data, log_w)
        ratios.append(WeightedRatio(label=f"band_limited[{i}]", ratio=float(np.exp(min(log_ratio, 709.0))),
                                    log_ratio=float(log_ratio)))
    search = operator_norm_search(kind, 2.0, grid=grid, budget=budget, seed=seed, log_weight=log_w,
                                  reference_log_q=log_q, workers=workers)

    log_max = max(r.log_ratio for r in ratios)
    if search.lower_bound > 0:
        log_max = max(log_max, float(np.log(search.lower_bound)))
    slack = get_settings().norm_slack
    within = log_max <= log_reference + np.log1p(slack)
    max_ratio = float(np.exp(min(log_max, 709.0)))
    if not within:
        logger.warning(f"Weighted {kind.value} ratio {max_ratio:.6g} exceeds Q^{exponent:g} = exp({log_reference:.6g})")
    return WeightedBoundReport(
        seed=seed,
        operator=kind,
        ratios=ratios,
        search=search,
        max_ratio=max_ratio,
        log_q_value=float(log_q),
        exponent=exponent,
        log_reference=float(log_reference),
        reference=float(np.exp(log_reference)) if log_reference < 709.0 else float("inf"),
        slack=slack,
        tolerance=tolerance,
        within_reference=bool(within),
        constant_one=max_ratio <= 1.0 + tolerance,
        holds=bool(within),
    )


# ---------------------------------------------------------------------------
# Operator-norm search
# ---------------------------------------------------------------------------

class _Objective:
    """log ||T f||_{p,w} - log ||f||_{p,w} and its gradient."""

    def __init__(self, grid: Grid2D, kind: MultiplierKind, p: float, weight: Optional[np.ndarray]):
        self.grid = grid
        self.kind = kind
        self.p = p
        self.weight = weight
        self.sym = symbol(grid, kind)

    def _op(self, data: np.ndarray, adjoint: bool = False) -> np.ndarray:
        s = np.conj(self.sym) if adjoint else self.sym
        return ifft2_real(s * fft2(data))

    def _sum(self, data: np.ndarray) -> float:
        vals = np.abs(data) ** self.p
        if self.weight is not None:
            vals = vals * self.weight
        return float(np.sum(vals))

    def ratio(self, data: np.ndarray) -> float:
        den = self._sum(data)
        if den == 0:
            return 0.0
        return (self._sum(self._op(data)) / den) ** (1.0 / self.p)

    def value_and_gradient(self, data: np.ndarray) -> Tuple[float, np.ndarray]:
        tf = self._op(data)
        s_t, s_f = self._sum(tf), self._sum(data)
        w = 1.0 if self.weight is None else self.weight
        g_t = w * np.sign(tf) * np.abs(tf) ** (self.p - 1)
        g_f = w * np.sign(data) * np.abs(data) ** (self.p - 1)
        grad = self._op(g_t, adjoint=True) / s_t - g_f / s_f
        value = (np.log(s_t) - np.log(s_f)) / self.p
        return value, grad


def _plane_waves(grid: Grid2D) -> List[Tuple[str, np.ndarray]]:
    x, y = grid.mesh()
    out = []
    for a, b in [(1, 0), (0, 1), (1, 1), (2, 1), (1, 2), (3, 1)]:
        kx, ky = 2 * np.pi * a / grid.lx, 2 * np.pi * b / grid.ly
        out.append((f"plane_wave({a},{b})", np.cos(kx * x + ky * y)))
    return out


def _conjugate_extremizers(grid: Grid2D, kind: MultiplierKind, p: float) -> List[Tuple[str, np.ndarray]]:
    """Profiles |cot(u/2)|^a and sgn(cot(u/2))|cot(u/2)|^a along one axis, a < 1/p."""
    along_y = kind == MultiplierKind.RIESZ_Y
    n = grid.ny if along_y else grid.nx
    u = 2 * np.pi * (np.arange(n) + 0.5) / n
    c = 1.0 / np.tan(u / 2.0)
    out = []
    for frac in (0.5, 0.7, 0.8, 0.85, 0.9, 0.93, 0.95, 0.97, 0.98, 0.99):
        a = frac / p
        for label, profile in (("odd", np.sign(c) * np.abs(c) ** a), ("even", np.abs(c) ** a)):
            profile = profile - np.mean(profile)
            data = np.broadcast_to(profile[:, None] if along_y else profile[None, :], grid.shape).copy()
            out.append((f"conjugate_{label}(a={a:.4f})", data))
    return out


def _random_band_limited(grid: Grid2D, seed_seq: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.default_rng(seed_seq)
    mask = dealias_mask(grid)
    k2 = grid.kx[None, :] ** 2 + grid.ky[:, None] ** 2
    scale = float(rng.uniform(0.5, 4.0)) * (2 * np.pi / min(grid.lx, grid.ly))
    coeffs = (rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)) * np.exp(-k2 / (2 * scale ** 2))
    return ifft2_real(np.where(mask, coeffs, 0.0))


def _ascent(objective: _Objective, data: np.ndarray, steps: int) -> Tuple[np.ndarray, float, int]:
    """Normalised gradient ascent with backtracking; returns (field, ratio, evaluations)."""
    value, grad = objective.value_and_gradient(data)
    step = 0.5
    evaluations = 0
    for _ in range(steps):
        gnorm = np.linalg.norm(grad)
        if gnorm == 0 or step < 1e-8:
            break
        trial = data + step * np.linalg.norm(data) * grad / gnorm
        trial_value, trial_grad = objective.value_and_gradient(trial)
        evaluations += 1
        if trial_value > value:
            data, value, grad = trial / np.linalg.norm(trial), trial_value, trial_grad
            step *= 1.5
        else:
            step *= 0.5
    return data, float(np.exp(value)), evaluations


@performance_monitor.measure_time("operator_norm_search")
def operator_norm_search(kind: MultiplierKind, p: float, weight: Optional[Field] = None,
                         budget: int = 64, grid: Optional[Grid2D] = None, seed: int = 0,
                         log_weight: Optional[np.ndarray] = None, workers: int = 1,
                         reference_log_q: Optional[float] = None) -> NormEstimate:
    """Search for a large ratio ||T f||_{L^p(w)} / ||f||_{L^p(w)}.

    Candidates: plane waves, conjugate-function near-extremizers, seeded random
    band-limited fields, then gradient ascent from the best one.
    """
    kind = MultiplierKind(kind)
    if kind not in SEARCH_KINDS:
        raise ValidationError(f"operator_norm_search does not support {kind.value}")
    if p <= 1:
        raise ValidationError(f"p must exceed 1, got {p}")
    if budget < 1:
        raise ValidationError(f"budget must be >= 1, got {budget}")

    if weight is not None:
        if np.any(weight.data <= 0):
            raise ValidationError("weight must be strictly positive")
        grid = weight.grid
        log_weight = np.log(weight.data)
    if grid is None:
        raise ValidationError("a grid or a weight field is required")
    w = None
    if log_weight is not None:
        log_weight = np.asarray(log_weight, dtype=np.float64)
        if log_weight.shape != grid.shape or not np.all(np.isfinite(log_weight)):
            raise ValidationError("weight must be strictly positive")
        # The ratio is invariant under scaling of the weight.
        log_weight = log_weight - np.max(log_weight)
        w = np.exp(log_weight)

    objective = _Objective(grid, kind, p, w)
    ascent_steps = budget // 4 if budget >= 8 else 0
    structured = _plane_waves(grid)
    if p != 2.0:
        structured += _conjugate_extremizers(grid, kind, p)
    structured = structured[:budget - ascent_steps]
    n_random = max(0, budget - ascent_steps - len(structured))
    seeds = np.random.SeedSequence(seed).spawn(n_random)

    with LogPerformance("operator_norm_search", kind=kind.value, p=p, budget=budget):
        candidates: List[Tuple[str, np.ndarray]] = list(structured)
        if n_random:
            with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
                randoms = list(pool.map(lambda s: _random_band_limited(grid, s), seeds))
            candidates += [(f"random[{i}]", d) for i, d in enumerate(randoms)]

        ratios = [objective.ratio(d) for _, d in candidates]
        best_index = int(np.argmax(ratios))
        best_label, best_data = candidates[best_index]
        best_ratio = ratios[best_index]
        evaluations = len(candidates)

        if ascent_steps:
            refined, refined_ratio, used = _ascent(objective, best_data.copy(), ascent_steps)
            evaluations += used
            if refined_ratio > best_ratio:
                best_ratio, best_label = refined_ratio, f"ascent({best_label})"

    sharp = sharp_riesz_constant(p)
    if kind in (MultiplierKind.RIESZ_X, MultiplierKind.RIESZ_Y):
        reference, bound_kind = sharp, BoundKind.SHARP
    else:
        reference, bound_kind = sharp ** 2, BoundKind.COMPOSITION

    weighted_reference = None
    if w is not None:
        if reference_log_q is None:
            reference_log_q = ap_constant_log(log_weight, p, _default_balls(grid), grid=grid).log_q_value
        weighted_reference = float(np.exp(min(reference_exponent(kind, p) * reference_log_q, 709.0)))

    estimate = NormEstimate(
        kind=kind,
        p=p,
        lower_bound=float(best_ratio),
        sharp_value=reference,
        bound_kind=bound_kind,
        slack=get_settings().norm_slack,
        sample_count=evaluations,
        weighted=w is not None,
        weighted_reference=weighted_reference,
        best_candidate=best_label,
    )
    logger.info(f"{kind.value} p={p}: best ratio {best_ratio:.6f} vs {bound_kind.value} {reference:.6f}")
    return estimate


def _default_balls(grid: Grid2D) -> BallFamily:
    return dyadic_balls(grid, stride=max(1, min(grid.nx, grid.ny) // 32))


# ---------------------------------------------------------------------------
# Report entry points
# ---------------------------------------------------------------------------

def riesz_check(grid: Grid2D, kind: MultiplierKind = MultiplierKind.RIESZ_X, p: float = 2.0,
                budget: int = 64, seed: int = 0, fields: int = 8, workers: int = 1) -> RieszReport:
    """Riesz identity, the x non-local L2 ratio and a norm search in one report."""
    if fields < 1:
        raise ValidationError(f"fields must be >= 1, got {fields}")
    samples = [_random_band_limited(grid, s) for s in np.random.SeedSequence(seed).spawn(fields)]
    identity_error = max(riesz_identity_error(Field(grid=grid, data=d)) for d in samples)
    nonlocal_ratios = []
    for data in samples:
        norm = float(np.linalg.norm(data - np.mean(data)))
        if norm > 0:
            out = apply_symbol(grid, data, MultiplierKind.NONLOCAL_X)
            nonlocal_ratios.append(float(np.linalg.norm(out)) / norm)
    estimate = operator_norm_search(kind, p, grid=grid, budget=budget, seed=seed, workers=workers)
    return RieszReport(
        seed=seed,
        grid=grid,
        identity_error=identity_error,
        nonlocal_max_ratio=max(nonlocal_ratios, default=0.0),
        estimate=estimate,
    )


def ap_check(grid: Grid2D, p: float = 2.0, R: float = 16.0, alpha: Optional[float] = None, r: float = 0.25,
             t: float = 0.5, stride: int = 4, refine: bool = True, fields: int = 16, budget: int = 32,
             operator: MultiplierKind = MultiplierKind.NONLOCAL_X, seed: int = 0,
             workers: int = 1) -> ApReport:
    """A_p constant of the regularised proof weight, its refinement and the weighted bound.

    ``alpha`` defaults to R**1.5.
    """
    alpha = R ** 1.5 if alpha is None else alpha
    params = carleman_service.make_params(R, r=r)
    log_w = regularised_weight(grid, params, carleman_service.cutoffs(R, r=r), t=t, alpha=alpha)
    balls = dyadic_balls(grid, stride=stride)

    with LogPerformance("ap_check", grid=grid.identifier, p=p, R=R, alpha=alpha):
        estimate = ap_constant_log(log_w, p, balls, grid=grid)
        refined = change = stable = None
        if refine:
            refined = ap_constant_log(log_w, p, balls.refine(), grid=grid)
            change = abs(refined.log_q_value - estimate.log_q_value)
            stable = bool(change <= np.log(1.1))
        bound = None
        if fields:
            log_q = estimate.log_q_value if p == 2.0 else None
            bound = weighted_bound_check(operator, log_w, grid, fields=fields, budget=budget, seed=seed,
                                         log_q=log_q, balls=balls, workers=workers)

    logger.info(f"A_{p:g} of the proof weight at R={R:g}, alpha={alpha:g}: log Q = {estimate.log_q_value:.6g}")
    if stable is False:
        logger.warning(f"log Q moved by {change:.6g} under refinement")
    return ApReport(seed=seed, grid=grid, estimate=estimate, R=R, alpha=alpha, refined=refined,
                    log_change=change, stable=stable, weighted_bound=bound)
