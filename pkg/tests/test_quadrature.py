"""
Tests for the Gauss-Legendre rules
"""

import numpy as np
import pytest
from lrdensity.quadrature import (
    adaptive_gauss, fixed_gauss, panel_integrals, split_points, tail_integrals)


def test_fixed_rule_is_exact_for_polynomials():
    """
    64 nodes integrate u^5 exactly
    """
    assert float(fixed_gauss(lambda u: u ** 5, 0.0, 1.0)) == pytest.approx(1 / 6, abs=1e-14)


def test_adaptive_rule_with_kink():
    """
    |u| integrates to 1 on [-1, 1] once the kink is a breakpoint
    """
    assert float(adaptive_gauss(np.abs, -1.0, 1.0, (0.0,))) == pytest.approx(1.0, abs=1e-13)


def test_adaptive_rule_handles_smooth_nonpolynomial():
    """
    Integral of exp over [0, 2]
    """
    assert float(adaptive_gauss(np.exp, 0.0, 2.0)) == pytest.approx(np.exp(2.0) - 1.0, rel=1e-12)


def test_vector_valued_integrand():
    """
    Matrix-valued integrands keep their shape
    """
    result = adaptive_gauss(lambda u: np.stack([np.ones_like(u), u ** 2], axis=-1)[:, :, None]
                            * np.ones((1, 1, 3)), -1.0, 1.0)
    assert result.shape == (2, 3)
    assert np.allclose(result[:, 0], [2.0, 2 / 3])


def test_empty_interval_gives_zero():
    """
    Upper end below the lower end
    """
    assert float(adaptive_gauss(np.exp, 1.0, 0.0)) == 0.0


def test_tail_integrals():
    """
    int_s^1 du = 1 - s, zero above the upper end
    """
    starts = np.array([-1.0, 0.25, 0.5, 2.0])
    tails = tail_integrals(np.ones_like, starts, 1.0)
    assert np.allclose(tails, [2.0, 0.75, 0.5, 0.0])
    cubic = tail_integrals(lambda u: u ** 3, np.array([0.0, -1.0]), 1.0, (0.5,))
    assert np.allclose(cubic, [0.25, 0.0])


def test_panel_integrals_add_up():
    """
    Panels over a partition sum to the whole integral
    """
    knots = np.array([0.0, 0.3, 0.9, 1.0])
    assert float(np.sum(panel_integrals(np.cos, knots))) == pytest.approx(np.sin(1.0), rel=1e-13)


def test_split_points_keep_inner_breakpoints():
    """
    Breakpoints outside the interval are dropped
    """
    assert split_points(-1.0, 1.0, (-2.0, 0.0, 1.0)).tolist() == [-1.0, 0.0, 1.0]
