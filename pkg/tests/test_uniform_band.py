"""
Tests for the simultaneous confidence bands
"""

import numpy as np
import pytest
from lrdensity.errors import ValidationError
from lrdensity.estimation.basis_kernel import BasisSpec, KernelSpec, RedundantSpec
from lrdensity.estimation.edf import edf_at_points, sort_sample
from lrdensity.estimation.fit_local import FitConfig, fit_grid
from lrdensity.inference.uniform_band import (
    BandConfig, confidence_band, correlation_matrix, cross_sigma_hat,
    factorize_correlation, gaussian_draws, gp_sup_quantile, sup_quantile)

Z = 1.959963984540054
CFG = FitConfig(KernelSpec("triangular"), BasisSpec(2), h=0.2, deriv=0)


@pytest.fixture(name="sample")
def fixture_sample():
    """
    Sorted U(0, 1) sample
    """
    return sort_sample(np.random.default_rng(21).random(2000))


@pytest.mark.parametrize("kwargs", [
    {"alpha": 1.0}, {"alpha": 0.0}, {"draws": 50}, {"seed": -1}, {"jitter_start": 0.0},
    {"grid": [0.5, 0.2]},
])
def test_band_config_validation(kwargs):
    """
    Invalid levels, draw counts, seeds, jitters and grids
    """
    with pytest.raises(ValidationError):
        BandConfig(**kwargs)


def test_factorization_repairs():
    """
    Cholesky, then jitter, then eigenvalue clipping
    """
    corr = np.array([[1.0, 0.5], [0.5, 1.0]])
    factor, info = factorize_correlation(corr)
    assert info["method"] == "cholesky"
    assert np.allclose(factor @ factor.T, corr)
    factor, info = factorize_correlation(np.ones((3, 3)))
    assert info["method"] == "jitter"
    assert np.allclose(factor @ factor.T, np.ones((3, 3)), atol=1e-6)
    indefinite = np.array([[1.0, 0.9, -0.9], [0.9, 1.0, 0.9], [-0.9, 0.9, 1.0]])
    factor, info = factorize_correlation(indefinite)
    assert info["method"] == "eigen_clip"
    assert info["min_eigenvalue"] < 0
    assert np.all(np.linalg.eigvalsh(factor @ factor.T) >= -1e-12)
    with pytest.raises(ValidationError):
        factorize_correlation(np.array([[1.0, 0.2], [0.3, 1.0]]))


def test_sup_quantile_order_statistic():
    """
    ceil((1 - alpha)(D + 1))-th smallest statistic
    """
    statistics = np.arange(99, 0, -1, dtype=float)
    assert sup_quantile(statistics, 0.1) == 90.0
    assert sup_quantile(statistics, 0.5) == 50.0
    assert sup_quantile(statistics, 0.001) == 99.0


def test_single_point_quantile_is_normal():
    """
    One grid point gives the two-sided normal quantile
    """
    assert gp_sup_quantile(np.eye(1), 0.05, 5000, seed=1) == pytest.approx(Z, abs=0.08)


def test_draws_are_reproducible():
    """
    Same seed, same draws, whatever the number of workers
    """
    factor = np.linalg.cholesky(np.array([[1.0, 0.3], [0.3, 1.0]]))
    first = gaussian_draws(factor, 200, seed=5)
    assert np.array_equal(first, gaussian_draws(factor, 200, seed=5, workers=4))
    assert not np.array_equal(first, gaussian_draws(factor, 200, seed=6))


def test_band_is_wider_than_pointwise(sample):
    """
    Band quantile never falls below the normal quantile
    """
    grid = np.linspace(0.2, 0.8, 7)
    gridfit = fit_grid(sample, edf_at_points(sample), CFG, grid)
    band = confidence_band(gridfit, BandConfig(draws=500, seed=3))
    assert band.quantile >= Z
    assert band.quantile >= band.simulated_quantile - 1e-12
    assert np.all(band.halfwidth >= Z * band.se - 1e-12)
    assert np.allclose(band.estimate, gridfit.to_frame()["est"])
    assert np.all((band.lower < band.estimate) & (band.estimate < band.upper))
    assert band.covers(band.estimate)
    frame = band.to_frame()
    assert list(frame.columns) == ["x", "est", "se", "band_lo", "band_hi"]
    assert band.diagnostics["method"] in ("cholesky", "jitter", "eigen_clip")
    with pytest.raises(ValidationError):
        confidence_band(gridfit, BandConfig(grid=np.linspace(0.2, 0.8, 5), draws=500))


def test_correlation_matrix(sample):
    """
    Unit diagonal, entries in [-1, 1], neighbours positively correlated
    """
    gridfit = fit_grid(sample, edf_at_points(sample), CFG, np.linspace(0.3, 0.7, 5))
    corr, diagnostics = correlation_matrix(gridfit, 0)
    assert np.allclose(np.diag(corr), 1.0)
    assert np.all(np.abs(corr) <= 1.0)
    assert corr[0, 1] > 0
    assert diagnostics["clipped_excess"] >= 0
    with pytest.raises(ValidationError):
        correlation_matrix(gridfit, 1)


def test_cross_covariance_on_the_diagonal(sample):
    """
    Cross covariance of a point with itself is its meat matrix
    """
    edf = edf_at_points(sample)
    gridfit = fit_grid(sample, edf, CFG, [0.5])
    assert np.allclose(cross_sigma_hat(sample, edf, CFG, 0.5, 0.5), gridfit.fits[0].sigma)
    off = cross_sigma_hat(sample, edf, CFG, 0.4, 0.6)
    assert np.allclose(off, cross_sigma_hat(sample, edf, CFG, 0.6, 0.4).T)


def test_duplicated_grid_matches_single_point(sample):
    """
    Two identical points behave as one
    """
    edf = edf_at_points(sample)
    single = confidence_band(fit_grid(sample, edf, CFG, [0.5]), BandConfig(draws=1000, seed=9))
    double = confidence_band(fit_grid(sample, edf, CFG, [0.5, 0.5]), BandConfig(draws=1000, seed=9))
    assert double.simulated_quantile == pytest.approx(single.simulated_quantile, abs=1e-3)


def test_minimum_distance_band(sample):
    """
    Minimum distance bands are no wider than plain ones from the same fits
    """
    cfg = FitConfig(KernelSpec("uniform"), BasisSpec(1, RedundantSpec(1)), h=0.2, deriv=0)
    gridfit = fit_grid(sample, edf_at_points(sample), cfg, np.linspace(0.3, 0.7, 5))
    plain = confidence_band(gridfit, BandConfig(draws=500, seed=2))
    md = confidence_band(gridfit, BandConfig(draws=500, seed=2, minimum_distance=True))
    assert np.all(md.se <= plain.se + 1e-12)
