"""
Tests for the propensity logit
"""

import numpy as np
import pytest
from lrdensity.errors import ValidationError
from lrdensity.program_eval.logit import (
    CLAMP, clamp_propensity, expand_covariates, fit_logit, predict_proba)


def _logit_data(n=2000, seed=0):
    rng = np.random.default_rng(seed)
    z = np.column_stack([np.ones(n), rng.normal(size=n)])
    y = (rng.random(n) < 1 / (1 + np.exp(-(0.3 + 0.8 * z[:, 1])))).astype(float)
    return z, y


def test_intercept_only_fits_the_mean():
    """
    Fitted probability of an intercept-only logit is the sample mean
    """
    y = np.array([1, 0, 0, 1, 1, 0, 1, 1], dtype=float)
    model = fit_logit(np.ones((8, 1)), y)
    assert model.converged
    assert predict_proba(model, np.ones((1, 1)))[0] == pytest.approx(y.mean(), abs=1e-7)


def test_coefficients_are_recovered():
    """
    Slope and intercept close to the generating values
    """
    z, y = _logit_data()
    model = fit_logit(z, y)
    assert model.converged
    assert model.beta == pytest.approx([0.3, 0.8], abs=0.15)
    assert model.loglik < 0


def test_label_swap_flips_coefficients():
    """
    Relabelling the outcome negates beta
    """
    z, y = _logit_data(500, seed=1)
    assert np.allclose(fit_logit(z, 1 - y).beta, -fit_logit(z, y).beta, atol=1e-6)


def test_invalid_inputs_are_rejected():
    """
    Single class, non-binary outcome, rank deficiency, length mismatch
    """
    z, y = _logit_data(100)
    with pytest.raises(ValidationError):
        fit_logit(z, np.ones(100))
    with pytest.raises(ValidationError):
        fit_logit(z, y * 2)
    with pytest.raises(ValidationError):
        fit_logit(np.column_stack([z, 2 * z[:, 1]]), y)
    with pytest.raises(ValidationError):
        fit_logit(z, y[:50])


def test_separation_is_flagged_and_clamped():
    """
    Perfectly separated data stop early, predictions stay inside the clamp
    """
    x = np.concatenate([np.linspace(-1, -0.05, 10), np.linspace(0.05, 1, 10)])
    z = np.column_stack([np.ones(20), x])
    model = fit_logit(z, (x > 0).astype(float))
    assert model.separated
    probabilities = predict_proba(model, z)
    assert probabilities.min() >= CLAMP[0]
    assert probabilities.max() <= CLAMP[1]


def test_clamp_propensity():
    """
    Values outside the overlap interval are moved to its ends
    """
    clamped = clamp_propensity(np.array([0.0, 0.5, 1.0]), (0.1, 0.9))
    assert clamped.tolist() == [0.1, 0.5, 0.9]


def test_expand_covariates():
    """
    Intercept followed by powers of every covariate
    """
    z = np.arange(10, dtype=float).reshape(5, 2)
    design = expand_covariates(z, 2)
    assert design.shape == (5, 5)
    assert np.all(design[:, 0] == 1)
    assert np.allclose(design[:, 3], z[:, 0] ** 2)
    assert expand_covariates(np.zeros((4, 0))).shape == (4, 1)
    with pytest.raises(ValidationError):
        expand_covariates(z, 0)
