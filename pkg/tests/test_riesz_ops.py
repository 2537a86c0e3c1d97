"""
Tests for Riesz transforms, A_p constants and operator-norm searches.
"""

import numpy as np
import pytest

from semzk.models.grid import Field, Grid2D, MultiplierKind
from semzk.models.riesz import BallFamily, BoundKind, dyadic_balls
from semzk.services import carleman as carleman_service
from semzk.services.riesz_ops import (
    ap_check,
    ap_constant,
    ap_constant_log,
    regularised_weight,
    nonlocal_operator,
    operator_norm_search,
    riesz,
    riesz_check,
    riesz_identity_error,
    reference_exponent,
    sharp_riesz_constant,
    weighted_bound_check,
)
from semzk.utils.error_handlers import ValidationError

SQRT2 = np.sqrt(2.0)


@pytest.fixture
def search_grid() -> Grid2D:
    return Grid2D(nx=32, ny=32, lx=2 * np.pi, ly=2 * np.pi)


def band_limited(grid: Grid2D, rng: np.random.Generator) -> Field:
    coeffs = np.fft.fft2(rng.normal(size=grid.shape))
    coeffs[grid.ny // 2, :] = 0.0
    coeffs[:, grid.nx // 2] = 0.0
    return Field(grid=grid, data=np.fft.ifft2(coeffs).real)


class TestRieszTransforms:
    """Identities of the Riesz transforms and the non-local operators."""

    def test_sum_of_squares_is_minus_identity(self, medium_grid, rng):
        f = band_limited(medium_grid, rng)
        assert riesz_identity_error(f) < 1e-10

    def test_riesz_of_plane_wave(self, small_grid):
        x, y = small_grid.mesh()
        f = Field(grid=small_grid, data=np.cos(3 * x))
        np.testing.assert_allclose(riesz(f, "x").data, np.sin(3 * x), atol=1e-12)
        np.testing.assert_allclose(riesz(f, "y").data, 0.0, atol=1e-12)

    def test_nonlocal_is_riesz_composition(self, medium_grid, rng):
        f = band_limited(medium_grid, rng)
        rx = riesz(f, "x")
        np.testing.assert_allclose(nonlocal_operator(f, "x").data, -riesz(rx, "x").data, atol=1e-12)
        np.testing.assert_allclose(nonlocal_operator(f, "y").data, -riesz(rx, "y").data, atol=1e-12)

    def test_unknown_axis(self, small_grid):
        with pytest.raises(ValueError):
            riesz(Field.zeros(small_grid), "z")


class TestSharpConstant:

    @pytest.mark.parametrize("p,expected", [
        (2.0, 1.0),
        (4.0, 1.0 + SQRT2),
        (4.0 / 3.0, 1.0 + SQRT2),
        (3.0, np.sqrt(3.0)),
    ])
    def test_values(self, p, expected):
        assert sharp_riesz_constant(p) == pytest.approx(expected, rel=1e-12)

    def test_rejects_p_at_most_one(self):
        with pytest.raises(ValidationError, match="exceed 1"):
            sharp_riesz_constant(1.0)


class TestOperatorNormSearch:
    """Seeded candidate searches for ||T||_{L^p}."""

    @pytest.mark.parametrize("kind", [MultiplierKind.RIESZ_X, MultiplierKind.RIESZ_Y])
    def test_l2_norm_of_riesz_is_one(self, search_grid, kind):
        estimate = operator_norm_search(kind, 2.0, grid=search_grid, budget=64, seed=1)
        assert abs(estimate.lower_bound - 1.0) < 1e-10
        assert estimate.bound_kind == BoundKind.SHARP
        assert estimate.sharp_value == pytest.approx(1.0)
        assert estimate.within_bound

    def test_nonlocal_reports_composition_bound(self, search_grid):
        estimate = operator_norm_search(MultiplierKind.NONLOCAL_X, 4.0, grid=search_grid, budget=32, seed=1)
        assert estimate.bound_kind == BoundKind.COMPOSITION
        assert estimate.sharp_value == pytest.approx((1.0 + SQRT2) ** 2)
        assert estimate.lower_bound <= estimate.sharp_value * (1.0 + estimate.slack)

    def test_same_seed_same_result(self, search_grid):
        a = operator_norm_search(MultiplierKind.RIESZ_X, 3.0, grid=search_grid, budget=40, seed=7)
        b = operator_norm_search(MultiplierKind.RIESZ_X, 3.0, grid=search_grid, budget=40, seed=7, workers=4)
        assert a == b

    def test_budget_counts_evaluations(self, search_grid):
        estimate = operator_norm_search(MultiplierKind.RIESZ_X, 2.0, grid=search_grid, budget=4, seed=0)
        assert estimate.sample_count == 4

    @pytest.mark.parametrize("kwargs,match", [
        ({"kind": MultiplierKind.DX, "p": 2.0}, "does not support"),
        ({"kind": MultiplierKind.RIESZ_X, "p": 1.0}, "exceed 1"),
        ({"kind": MultiplierKind.RIESZ_X, "p": 2.0, "budget": 0}, "budget"),
    ])
    def test_rejects_bad_arguments(self, search_grid, kwargs, match):
        with pytest.raises(ValidationError, match=match):
            operator_norm_search(grid=search_grid, **kwargs)

    def test_requires_grid_or_weight(self):
        with pytest.raises(ValidationError, match="grid or a weight"):
            operator_norm_search(MultiplierKind.RIESZ_X, 2.0)

    def test_rejects_non_positive_weight(self, search_grid):
        w = Field(grid=search_grid, data=np.zeros(search_grid.shape))
        with pytest.raises(ValidationError, match="strictly positive"):
            operator_norm_search(MultiplierKind.RIESZ_X, 2.0, weight=w)

    def test_weighted_search_reports_reference(self, search_grid):
        x, _ = search_grid.mesh()
        w = Field(grid=search_grid, data=np.exp(0.3 * np.cos(x)))
        estimate = operator_norm_search(MultiplierKind.RIESZ_X, 2.0, weight=w, budget=16, seed=2)
        assert estimate.weighted
        assert estimate.weighted_reference >= 1.0
        assert np.isfinite(estimate.lower_bound)

    @pytest.mark.slow
    def test_p4_search_approaches_sharp_constant(self):
        grid = Grid2D(nx=512, ny=8, lx=2 * np.pi, ly=2 * np.pi)
        estimate = operator_norm_search(MultiplierKind.RIESZ_X, 4.0, grid=grid, budget=64, seed=3)
        sharp = 1.0 + SQRT2
        assert estimate.lower_bound <= sharp * 1.05
        assert estimate.lower_bound >= 0.9 * sharp


class TestApConstant:
    """A_p constants over ball families."""

    @pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
    def test_constant_weight_is_exactly_one(self, medium_grid, p):
        w = Field(grid=medium_grid, data=np.ones(medium_grid.shape))
        estimate = ap_constant(w, p, dyadic_balls(medium_grid, stride=8))
        assert estimate.q_value == 1.0
        assert estimate.log_q_value == 0.0

    def test_scale_invariance(self, medium_grid):
        x, _ = medium_grid.mesh()
        balls = dyadic_balls(medium_grid, stride=8)
        base = ap_constant_log(0.05 * x, 2.0, balls, grid=medium_grid)
        scaled = ap_constant_log(0.05 * x + 40.0, 2.0, balls, grid=medium_grid)
        assert scaled.log_q_value == pytest.approx(base.log_q_value, rel=1e-9)

    def test_non_constant_weight_exceeds_one(self, medium_grid):
        x, y = medium_grid.mesh()
        w = Field(grid=medium_grid, data=np.exp(0.5 * np.sin(x / 3.0) + 0.2 * y / 20.0))
        estimate = ap_constant(w, 2.0, dyadic_balls(medium_grid, stride=8))
        assert 1.0 < estimate.q_value < np.inf
        assert estimate.ball_count > 0

    def test_log_space_matches_direct(self, medium_grid):
        x, _ = medium_grid.mesh()
        log_w = 0.1 * x
        balls = dyadic_balls(medium_grid, stride=8)
        direct = ap_constant(Field(grid=medium_grid, data=np.exp(log_w)), 3.0, balls)
        logged = ap_constant_log(log_w, 3.0, balls, grid=medium_grid)
        assert logged.log_q_value == pytest.approx(direct.log_q_value, rel=1e-12)

    def test_huge_weights_stay_finite_in_log_space(self, medium_grid):
        x, _ = medium_grid.mesh()
        estimate = ap_constant_log(60.0 * x, 2.0, dyadic_balls(medium_grid, stride=8), grid=medium_grid)
        assert estimate.q_value == float("inf")
        assert np.isfinite(estimate.log_q_value)

    def test_rejects_non_positive_weight(self, medium_grid):
        w = Field(grid=medium_grid, data=np.zeros(medium_grid.shape))
        with pytest.raises(ValidationError, match="strictly positive"):
            ap_constant(w, 2.0, dyadic_balls(medium_grid))

    @pytest.mark.parametrize("p", [1.0, 0.5, np.inf])
    def test_rejects_bad_exponent(self, medium_grid, p):
        with pytest.raises(ValidationError, match="p must lie"):
            ap_constant_log(np.zeros(medium_grid.shape), p, dyadic_balls(medium_grid), grid=medium_grid)

    def test_empty_family(self, medium_grid):
        balls = BallFamily(stride=1, base_radius=100.0, max_radius=200.0)
        with pytest.raises(ValidationError, match="empty ball family"):
            ap_constant_log(np.zeros(medium_grid.shape), 2.0, balls, grid=medium_grid)

    def test_matches_dense_quadrature_on_refined_grid(self):
        coarse = Grid2D(nx=32, ny=32, lx=8.0, ly=8.0)
        fine = Grid2D(nx=128, ny=128, lx=8.0, ly=8.0)

        def weight(grid):
            x, y = grid.mesh()
            return np.sqrt(x ** 2 + y ** 2 + 0.01)

        balls = dyadic_balls(coarse, stride=2)
        estimate = ap_constant(Field(grid=coarse, data=weight(coarse)), 2.0, balls)

        xf, yf = fine.mesh()
        wf = weight(fine)
        best = 0.0
        for radius in balls.radii:
            rx = int(np.floor(radius / coarse.dx + 1e-12))
            for i in range(rx, coarse.nx - rx, balls.stride):
                for j in range(rx, coarse.ny - rx, balls.stride):
                    inside = (xf - coarse.x[i]) ** 2 + (yf - coarse.y[j]) ** 2 <= radius ** 2
                    best = max(best, float(np.mean(wf[inside]) * np.mean(1.0 / wf[inside])))
        assert best > 1.2
        assert estimate.q_value == pytest.approx(best, rel=0.05)


    def test_refine_halves_stride_and_doubles_density(self, medium_grid):
        balls = dyadic_balls(medium_grid, stride=8)
        finer = balls.refine()
        assert finer.stride == 4
        assert finer.level == 1
        assert len(finer.radii) == 2 * len(balls.radii) - 1
        assert finer.radii[1] == pytest.approx(balls.radii[0] * SQRT2)


class TestWeightedBounds:
    """Weighted L2 ratios on generic band-limited fields."""

    def test_flat_weight_keeps_non_local_ratios_below_one(self, medium_grid):
        report = weighted_bound_check(MultiplierKind.NONLOCAL_X, np.zeros(medium_grid.shape), medium_grid,
                                      fields=6, budget=8, seed=5)
        assert report.log_q_value == 0.0
        assert report.max_ratio <= 1.0 + 1e-12
        assert report.constant_one
        assert report.within_reference
        assert [r.label for r in report.ratios] == [f"band_limited[{i}]" for i in range(6)]

    def test_weight_changes_ratios(self, medium_grid):
        x, _ = medium_grid.mesh()
        flat = weighted_bound_check(MultiplierKind.NONLOCAL_X, np.zeros(medium_grid.shape), medium_grid,
                                    fields=6, budget=8, seed=5)
        bumpy = weighted_bound_check(MultiplierKind.NONLOCAL_X, 0.5 * np.sin(x / 3.0), medium_grid,
                                     fields=6, budget=8, seed=5)
        diffs = [abs(a.log_ratio - b.log_ratio) for a, b in zip(flat.ratios, bumpy.ratios)]
        assert max(diffs) > 1e-6
        assert bumpy.log_q_value > 0.0
        assert bumpy.within_reference

    def test_regularised_weight_on_generic_fields(self, medium_grid):
        R = 8.0
        params = carleman_service.make_params(R)
        log_w = regularised_weight(medium_grid, params, carleman_service.cutoffs(R), t=0.5, alpha=R ** 1.5)
        report = weighted_bound_check(MultiplierKind.NONLOCAL_X, log_w, medium_grid, fields=6, budget=8, seed=3)
        assert report.operator == MultiplierKind.NONLOCAL_X
        assert report.exponent == 2.0
        assert report.search.weighted
        assert all(np.isfinite(r.log_ratio) and r.ratio > 0 for r in report.ratios)
        assert report.log_reference == pytest.approx(2.0 * report.log_q_value)
        assert report.within_reference
        assert report.holds

    def test_seeded(self, medium_grid):
        x, _ = medium_grid.mesh()
        a = weighted_bound_check(MultiplierKind.NONLOCAL_Y, 0.2 * np.cos(x / 4.0), medium_grid,
                                 fields=3, budget=4, seed=11)
        b = weighted_bound_check(MultiplierKind.NONLOCAL_Y, 0.2 * np.cos(x / 4.0), medium_grid,
                                 fields=3, budget=4, seed=11)
        assert a.model_dump() == b.model_dump()

    @pytest.mark.parametrize("kind,p,expected", [
        (MultiplierKind.RIESZ_X, 2.0, 1.0),
        (MultiplierKind.RIESZ_Y, 1.5, 2.0),
        (MultiplierKind.NONLOCAL_X, 2.0, 2.0),
        (MultiplierKind.NONLOCAL_Y, 4.0, 2.0),
        (MultiplierKind.NONLOCAL_X, 1.5, 4.0),
    ])
    def test_reference_exponent(self, kind, p, expected):
        assert reference_exponent(kind, p) == expected

    def test_rejects_non_finite_weight(self, medium_grid):
        log_w = np.zeros(medium_grid.shape)
        log_w[0, 0] = -np.inf
        with pytest.raises(ValidationError, match="finite"):
            weighted_bound_check(MultiplierKind.NONLOCAL_X, log_w, medium_grid, fields=1)

    def test_rejects_unsupported_kind(self, medium_grid):
        with pytest.raises(ValidationError, match="does not support"):
            weighted_bound_check(MultiplierKind.DX, np.zeros(medium_grid.shape), medium_grid, fields=1)

    def test_regularised_weight_is_finite(self, medium_grid):
        params = carleman_service.make_params(8.0)
        log_w = regularised_weight(medium_grid, params, carleman_service.cutoffs(8.0), t=0.5)
        assert log_w.shape == medium_grid.shape
        assert np.all(np.isfinite(log_w))
        # Outside the interior cutoff only the regularisation is left.
        assert log_w[0, 0] == pytest.approx(np.log(1e-3) + np.log(1e-3), abs=1e-9)

    def test_regularised_weight_alpha_override(self, medium_grid):
        params = carleman_service.make_params(8.0)
        cut = carleman_service.cutoffs(8.0)
        low = regularised_weight(medium_grid, params, cut, t=0.5, alpha=8.0 ** 1.5)
        high = regularised_weight(medium_grid, params, cut, t=0.5)
        assert params.alpha > 8.0 ** 1.5
        assert np.max(low) < np.max(high)
        assert low[0, 0] == pytest.approx(high[0, 0])

    def test_regularised_weight_rejects_non_positive_regularisation(self, medium_grid):
        params = carleman_service.make_params(8.0)
        with pytest.raises(ValidationError, match="positive"):
            regularised_weight(medium_grid, params, carleman_service.cutoffs(8.0), epsilon=0.0)
        with pytest.raises(ValidationError, match="alpha must be positive"):
            regularised_weight(medium_grid, params, carleman_service.cutoffs(8.0), alpha=0.0)


class TestReports:
    """Report entry points used by the command line."""

    def test_riesz_check(self, search_grid):
        report = riesz_check(search_grid, p=2.0, budget=16, seed=4, fields=3)
        assert report.kind == "riesz_check"
        assert report.seed == 4
        assert report.identity_error < 1e-10
        assert report.nonlocal_max_ratio <= 1.0 + 1e-12
        assert abs(report.estimate.lower_bound - 1.0) < 1e-10

    def test_riesz_check_needs_fields(self, search_grid):
        with pytest.raises(ValidationError, match="fields"):
            riesz_check(search_grid, fields=0)

    def test_ap_check_reports_log_change(self, medium_grid):
        report = ap_check(medium_grid, p=2.0, R=8.0, stride=4, fields=2, budget=4, seed=1)
        assert report.alpha == pytest.approx(8.0 ** 1.5)
        assert report.log_change == pytest.approx(abs(report.refined.log_q_value - report.estimate.log_q_value))
        assert report.stable == (report.log_change <= np.log(1.1))
        assert report.weighted_bound.log_q_value == report.estimate.log_q_value

    def test_ap_check_without_refinement_or_fields(self, medium_grid):
        report = ap_check(medium_grid, R=8.0, alpha=5.0, refine=False, fields=0)
        assert report.alpha == 5.0
        assert report.refined is None and report.log_change is None and report.stable is None
        assert report.weighted_bound is None

    @pytest.mark.slow
    def test_ap_check_on_proof_weight(self):
        grid = Grid2D(nx=128, ny=128, lx=64.0, ly=64.0)
        report = ap_check(grid, p=2.0, R=16.0, alpha=16.0 ** 1.5, stride=4, refine=True, fields=16, seed=9)
        assert np.isfinite(report.estimate.log_q_value)
        assert report.estimate.log_q_value > 0
        assert abs(report.refined.log_q_value - report.estimate.log_q_value) <= np.log(1.1)
        assert report.stable
        bound = report.weighted_bound
        assert bound.operator == MultiplierKind.NONLOCAL_X
        assert all(np.isfinite(r.log_ratio) for r in bound.ratios)
        assert bound.within_reference
