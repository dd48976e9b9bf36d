"""
Tests for the local L2 and numerical-derivative estimators
"""

import numpy as np
import pytest
from lrdensity.efficiency.mindist import variance_bound
from lrdensity.errors import ValidationError
from lrdensity.estimation.basis_kernel import BasisSpec, KernelSpec
from lrdensity.estimation.edf import edf_at_points, sort_sample
from lrdensity.estimation.fit_local import FitConfig, fit_point
from lrdensity.estimation.l2fit import (
    DesignSpec, design_gram, kde, l2_fit_point, l2_sigma_hat, nd_asy_variance, nd_estimate)

CFG = FitConfig(KernelSpec("triangular"), BasisSpec(2), h=0.2, deriv=0)


@pytest.fixture(name="uniform_data")
def fixture_uniform_data():
    """
    Sorted U(0, 1) sample with its EDF
    """
    sample = sort_sample(np.random.default_rng(4).random(4000))
    return sample, edf_at_points(sample)


def test_empirical_design_is_the_local_regression(uniform_data):
    """
    Empirical design measure reproduces fit_point
    """
    sample, edf = uniform_data
    for x in (0.0, 0.3, 0.8):
        l2 = l2_fit_point(sample, edf, CFG, DesignSpec("empirical"), x)
        assert np.allclose(l2.theta, fit_point(sample, edf, CFG, x).theta)


def test_lebesgue_design_on_uniform_data(uniform_data):
    """
    Distribution function and density of U(0, 1), inside and at 0
    """
    sample, edf = uniform_data
    design = DesignSpec("lebesgue", (0.0, 1.0))
    interior = l2_fit_point(sample, edf, CFG, design, 0.5)
    assert interior.theta[0] == pytest.approx(0.5, abs=0.03)
    assert interior.theta[1] == pytest.approx(1.0, abs=0.15)
    boundary = l2_fit_point(sample, edf, CFG, design, 0.0)
    assert boundary.theta[1] == pytest.approx(1.0, abs=0.3)
    assert np.all(np.linalg.eigvalsh(interior.omega) >= -1e-12)


def test_known_unit_density_matches_lebesgue(uniform_data):
    """
    g = 1 on the support is the Lebesgue design
    """
    sample, edf = uniform_data
    lebesgue = l2_fit_point(sample, edf, CFG, DesignSpec("lebesgue", (0.0, 1.0)), 0.1)
    known = l2_fit_point(sample, edf, CFG, DesignSpec("known_density", (0.0, 1.0), np.ones_like), 0.1)
    assert np.allclose(known.theta, lebesgue.theta, rtol=1e-10)


def test_design_gram_in_the_interior():
    """
    Lebesgue Gram with uniform kernel is int R R' / 2
    """
    cfg = FitConfig(KernelSpec("uniform"), BasisSpec(1), h=0.1)
    gram = design_gram(cfg, DesignSpec("lebesgue", (0.0, 1.0)), 0.5)
    assert np.allclose(gram, np.diag([1.0, 1 / 3]))


def test_plug_in_sigma(uniform_data):
    """
    Sigma_h is n times the meat matrix of the fit
    """
    sample, edf = uniform_data
    design = DesignSpec("lebesgue", (0.0, 1.0))
    fit = l2_fit_point(sample, edf, CFG, design, 0.4)
    assert np.allclose(l2_sigma_hat(sample, edf, CFG, design, 0.4), sample.n * fit.sigma)
    assert np.allclose(fit.psi.sum(axis=0), 0.0, atol=1e-7)


@pytest.mark.parametrize("p", [1, 2, 3, 4, 5])
def test_uniform_kernel_derivative_estimator_attains_bound(p):
    """
    With the uniform kernel the numerical-derivative variance is the bound
    """
    for deriv in range(p):
        assert nd_asy_variance(p, deriv, KernelSpec("uniform")) == pytest.approx(
            variance_bound(p, deriv), rel=1e-10)


def test_derivative_estimator_on_uniform_data(uniform_data):
    """
    f = 1 and f' = 0 inside and at the boundary
    """
    sample, _ = uniform_data
    cfg = FitConfig(KernelSpec("triangular"), BasisSpec(2), h=0.2)
    interior = nd_estimate(sample, cfg, (0.0, 1.0), 0.5)
    assert interior.shape == (2,)
    assert interior[0] == pytest.approx(1.0, abs=0.15)
    assert nd_estimate(sample, cfg, (0.0, 1.0), 0.0)[0] == pytest.approx(1.0, abs=0.3)


def test_kde_halves_at_the_boundary(uniform_data):
    """
    Plain kernel estimate loses half its mass at the support end
    """
    sample, _ = uniform_data
    assert kde(sample, KernelSpec("triangular"), 0.1, 0.0) == pytest.approx(0.5, abs=0.1)
    assert kde(sample, KernelSpec("triangular"), 0.1, 0.5) == pytest.approx(1.0, abs=0.15)


def test_design_validation():
    """
    Unknown kinds, missing supports and missing densities
    """
    with pytest.raises(ValidationError):
        DesignSpec("counting")
    with pytest.raises(ValidationError):
        DesignSpec("lebesgue")
    with pytest.raises(ValidationError):
        DesignSpec("lebesgue", (1.0, 0.0))
    with pytest.raises(ValidationError):
        DesignSpec("known_density", (0.0, 1.0))
    sample = sort_sample(np.linspace(0, 1, 50))
    with pytest.raises(ValidationError):
        l2_fit_point(sample, edf_at_points(sample), CFG, DesignSpec("lebesgue", (0.0, 1.0)), 3.0)
