"""
Tests for annulus norms, decay fits and the two-run uniqueness contrast.
"""

import numpy as np
import pytest

from semzk.models.base import Verdict
from semzk.models.grid import Field, Grid2D
from semzk.models.initial_data import GaussianData, PerturbedData
from semzk.models.solver import ModelKind, Trajectory
from semzk.models.uniqueness import AnnulusReport, ExperimentConfig, RadiusConvention, Window
from semzk.services.sem_solver import conserved
from semzk.services.uniqueness_experiments import (
    A0_FACTOR,
    annulus_mask,
    annulus_norm,
    annulus_norm_at,
    core_mass,
    decay_profile,
    endpoint_weighted_norms,
    fit_decay_power,
    fit_exponent,
    five_term_integrand,
    uniqueness_experiment,
)
from semzk.utils.error_handlers import (
    DomainError,
    InsufficientDataError,
    OverflowGuardError,
    ValidationError,
)


def static_trajectory(field: Field, times=(0.0, 0.5, 1.0)) -> Trajectory:
    """A trajectory holding the same field at every time."""
    return Trajectory(
        model=ModelKind.LINEARIZED,
        grid=field.grid,
        dt=times[1] - times[0] if len(times) > 1 else 1.0,
        times=list(times),
        snapshots=[field] * len(times),
        invariant_log=[conserved(field, ModelKind.LINEARIZED, t) for t in times],
    )


def synthetic_report(radii, values) -> AnnulusReport:
    values = [float(v) for v in values]
    return AnnulusReport(grid="synthetic", radii=list(radii), a_values=values, a_initial=values, a_final=values)


@pytest.fixture
def small_experiment() -> ExperimentConfig:
    return ExperimentConfig(
        grid=Grid2D(nx=96, ny=96, lx=48.0, ly=48.0),
        dt=0.01,
        t_end=0.2,
        radii=[2.0, 4.0, 6.0, 8.0, 10.0, 12.0],
        seed=5,
    )


class TestAnnulusNorm:
    """A_R over the annulus R - 1 <= r <= R."""

    def test_mask_is_sharp_annulus(self, medium_grid):
        mask = annulus_mask(medium_grid, 5.0)
        x, y = medium_grid.mesh()
        rho = np.hypot(x, y)
        assert np.all((rho[mask] >= 4.0) & (rho[mask] <= 5.0))
        assert not np.any(mask[(rho < 4.0) | (rho > 5.0)])

    def test_mask_limits(self, medium_grid):
        with pytest.raises(ValidationError, match=">= 1"):
            annulus_mask(medium_grid, 0.5)
        with pytest.raises(DomainError, match="exceeds the domain"):
            annulus_mask(medium_grid, 19.0)
        annulus_mask(medium_grid, 18.0)

    def test_zero_field(self, medium_grid):
        v = static_trajectory(Field.zeros(medium_grid))
        assert annulus_norm(v, 4.0) == 0.0

    def test_constant_in_time(self, medium_grid, make_gaussian):
        f = make_gaussian(medium_grid, sigma=3.0)
        v = static_trajectory(f)
        assert annulus_norm(v, 4.0) == pytest.approx(annulus_norm_at(f, 4.0), rel=1e-12)

    def test_linear_scaling(self, medium_grid, make_gaussian):
        f = make_gaussian(medium_grid, sigma=3.0)
        doubled = Field(grid=medium_grid, data=2.0 * f.data)
        assert annulus_norm_at(doubled, 6.0) == pytest.approx(2.0 * annulus_norm_at(f, 6.0), rel=1e-12)

    def test_invariant_under_axis_swap(self, medium_grid, make_gaussian):
        f = make_gaussian(medium_grid, sigma=2.0, x0=3.0, y0=-1.0)
        swapped = Field(grid=medium_grid, data=f.data.T)
        for R in (2.0, 5.0, 9.0):
            assert annulus_norm_at(swapped, R) == pytest.approx(annulus_norm_at(f, R), rel=1e-10)

    def test_integrand_of_plane_wave(self, small_grid):
        x, _ = small_grid.mesh()
        f = Field(grid=small_grid, data=np.sin(2 * x))
        # v^2 + v_x^2 + (Lap v)^2 = sin^2 + 4 cos^2 + 16 sin^2
        expected = 17 * np.sin(2 * x) ** 2 + 4 * np.cos(2 * x) ** 2
        np.testing.assert_allclose(five_term_integrand(f), expected, atol=1e-10)

    def test_needs_two_snapshots(self, medium_grid):
        v = static_trajectory(Field.zeros(medium_grid), times=(0.0,))
        with pytest.raises(InsufficientDataError):
            annulus_norm(v, 4.0)


class TestDecayProfile:
    """Per-radius profiles and fitted decay laws."""

    def test_profile_windows(self, medium_grid, make_gaussian):
        f = make_gaussian(medium_grid, sigma=2.0)
        report = decay_profile(static_trajectory(f), [2.0, 4.0, 6.0], trajectory_id="static", seed=1)
        assert report.trajectory == "static"
        assert report.grid == medium_grid.identifier
        np.testing.assert_allclose(report.a_values, report.a_initial, rtol=1e-12)
        np.testing.assert_allclose(report.a_final, report.a_initial, rtol=1e-12)
        assert report.a_values[0] > report.a_values[1] > report.a_values[2] > 0.0
        assert report.values(Window.FINAL) == report.a_final

    def test_radii_must_increase(self, medium_grid):
        with pytest.raises(ValidationError, match="strictly increasing"):
            decay_profile(static_trajectory(Field.zeros(medium_grid)), [4.0, 2.0])

    def test_exact_model_is_recovered(self):
        radii = np.arange(1.0, 3.01, 0.25)
        fit = fit_exponent(synthetic_report(radii, 2.0 * np.exp(-3.0 * radii ** 1.5)))
        assert fit.c0_fit == pytest.approx(2.0, rel=1e-10)
        assert fit.c1_fit == pytest.approx(3.0, rel=1e-10)
        assert fit.residual < 1e-10
        assert fit.radii_used == pytest.approx(list(radii))

    def test_noisy_model(self, rng):
        radii = np.arange(1.0, 3.01, 0.25)
        values = 2.0 * np.exp(-3.0 * radii ** 1.5) * (1.0 + 0.01 * rng.standard_normal(radii.size))
        fit = fit_exponent(synthetic_report(radii, values))
        assert fit.c1_fit == pytest.approx(3.0, rel=0.05)
        assert fit.residual > 0.0

    def test_upper_radius_convention(self):
        radii = np.arange(4.0, 25.0, 2.0)
        values = 0.5 * np.exp(-3.0 * (radii / 28.0) ** 1.5)
        fit = fit_exponent(synthetic_report(radii, values), convention=RadiusConvention.AT_28R)
        assert fit.c1_fit == pytest.approx(3.0, rel=1e-8)
        assert fit.convention == RadiusConvention.AT_28R

    def test_zero_values_are_skipped(self):
        radii = [1.0, 2.0, 3.0, 4.0]
        values = [np.exp(-1.0), np.exp(-2.0 ** 1.5), np.exp(-3.0 ** 1.5), 0.0]
        fit = fit_exponent(synthetic_report(radii, values))
        assert fit.radii_used == [1.0, 2.0, 3.0]
        assert fit.c1_fit == pytest.approx(1.0, rel=1e-10)

    def test_too_few_positive_values(self):
        with pytest.raises(InsufficientDataError, match="at least 3"):
            fit_exponent(synthetic_report([1.0, 2.0, 3.0], [1.0, 0.5, 0.0]))

    def test_power_fit(self):
        radii = np.linspace(1.0, 4.0, 8)
        fit = fit_decay_power(synthetic_report(radii, 2.0 * np.exp(-3.0 * radii ** 1.2)))
        assert fit.gamma == pytest.approx(1.2, abs=1e-4)
        assert fit.c1_fit == pytest.approx(3.0, rel=1e-3)

    def test_power_fit_needs_four_values(self):
        radii = [1.0, 2.0, 3.0]
        with pytest.raises(InsufficientDataError, match="at least 4"):
            fit_decay_power(synthetic_report(radii, np.exp(-np.array(radii))))


class TestAuxiliaryNorms:
    """Core mass and endpoint-weighted norms."""

    def test_core_mass_of_constant_field(self, medium_grid):
        ones = Field(grid=medium_grid, data=np.ones(medium_grid.shape))
        x, y = medium_grid.mesh()
        area = np.count_nonzero(np.hypot(x, y) <= 1.0) * medium_grid.cell_area
        v = static_trajectory(ones, times=(0.0, 0.25, 0.5, 0.75, 1.0))
        # window [0.25, 0.75] has length 0.5
        assert core_mass(v, 0.25) == pytest.approx(np.sqrt(0.5 * area), rel=1e-12)

    def test_core_mass_short_window(self, medium_grid):
        ones = Field(grid=medium_grid, data=np.ones(medium_grid.shape))
        assert core_mass(static_trajectory(ones, times=(0.0, 1.0)), 0.25) == 0.0

    def test_endpoint_weights(self, medium_grid, make_gaussian):
        f = make_gaussian(medium_grid, sigma=2.0)
        norms = endpoint_weighted_norms(static_trajectory(f), 0.1)
        plain = float(np.sqrt(np.sum(f.data ** 2) * medium_grid.cell_area))
        assert norms.initial == pytest.approx(norms.final)
        assert norms.initial > plain

    def test_endpoint_weight_guard(self, medium_grid):
        with pytest.raises(OverflowGuardError):
            endpoint_weighted_norms(static_trajectory(Field.zeros(medium_grid)), 100.0)


class TestUniquenessExperiment:
    """Two SEM runs contrasted through their difference."""

    def test_identical_data(self, small_experiment):
        cfg = small_experiment.model_copy(update={"u2": GaussianData()})
        report = uniqueness_experiment(cfg)
        assert report.verdict == Verdict.IDENTICAL
        assert report.max_abs_v < 1e-12
        assert all(a == 0.0 for a in report.profile.a_values)
        assert report.fits == {}
        assert report.a0_form is None

    def test_perturbed_pair(self, small_experiment):
        report = uniqueness_experiment(small_experiment)
        assert report.verdict == Verdict.DISTINCT
        assert report.seed == 5
        assert report.profile.a_values[0] > 0.0
        fit = report.fits["interval"]
        assert fit is not None
        assert np.isfinite(fit.residual)
        assert report.a0_form == pytest.approx(A0_FACTOR * fit.c1_fit)
        assert set(report.fits) == {"interval", "initial", "final", "interval_28R"}
        assert report.core_mass > 0.0
        assert report.boundary_certificate.u1_max < 1e-10
        assert report.boundary_certificate.u2_max < 1e-10
        assert report.dt == pytest.approx(0.01)

    def test_tiny_bump_is_still_distinct(self, small_experiment):
        cfg = small_experiment.model_copy(update={"u2": PerturbedData(bump_amplitude=1e-6)})
        assert uniqueness_experiment(cfg).verdict == Verdict.DISTINCT

    def test_radii_validation(self):
        with pytest.raises(ValidationError, match="strictly increasing"):
            ExperimentConfig(radii=[4.0, 4.0])

    @pytest.mark.slow
    def test_default_configuration(self):
        report = uniqueness_experiment(ExperimentConfig(seed=0))
        assert report.verdict == Verdict.DISTINCT
        assert all(a > 0.0 for a in report.profile.a_values)
        assert report.a0_form is not None
        assert report.boundary_certificate.v_max < 1e-10
