"""
Tests for kernels, local bases and the scaling matrix
"""

import numpy as np
import pytest
from scipy.integrate import quad
from lrdensity.errors import ValidationError
from lrdensity.estimation.basis_kernel import (
    BasisSpec, KernelSpec, RedundantSpec, basis_eval, change_of_basis,
    derivative_basis, kernel_eval, scaling_matrix, scaling_vector, target_index)


@pytest.mark.parametrize("kind", ["uniform", "triangular", "epanechnikov"])
def test_kernels_integrate_to_one(kind):
    """
    Every kernel is a density on [-1, 1]
    """
    kernel = KernelSpec(kind)
    total, _ = quad(lambda u: kernel_eval(kernel, u), -1, 1, points=[0.0])
    assert total == pytest.approx(1.0, abs=1e-10)


def test_kernel_vanishes_outside_support():
    """
    Kernel values outside [-1, 1] are zero, the value at 0 is the peak
    """
    values = kernel_eval(KernelSpec("epanechnikov"), np.array([-1.5, 0.0, 1.01]))
    assert values.tolist() == [0.0, 0.75, 0.0]
    assert isinstance(kernel_eval(KernelSpec("uniform"), 0.3), float)


def test_unknown_kernel_is_rejected():
    """
    Only the three compact kernels are known
    """
    with pytest.raises(ValidationError):
        KernelSpec("gaussian")


def test_polynomial_basis_uses_factorial_scaling():
    """
    R(u) = (1, u, u^2/2) for p = 2
    """
    assert np.allclose(basis_eval(BasisSpec(2), 0.5), [1.0, 0.5, 0.125])
    assert basis_eval(BasisSpec(2), np.array([0.1, 0.2])).shape == (2, 3)


def test_redundant_regressor_parity():
    """
    Odd Q for the density, even Q for its first derivative
    """
    assert RedundantSpec.for_derivative(2, 0).degree == 5
    assert RedundantSpec.for_derivative(2, 1).degree == 6
    basis = BasisSpec(1, RedundantSpec(1))
    assert basis.dim == 3
    assert basis.q_index == 2
    assert np.allclose(basis_eval(basis, 0.5), [1.0, 0.5, 0.125])


def test_collinear_redundant_regressor_is_rejected():
    """
    Q of degree at most p duplicates a polynomial column
    """
    with pytest.raises(ValidationError):
        BasisSpec(3, RedundantSpec(1, "odd"))
    with pytest.raises(ValidationError):
        RedundantSpec(0)


def test_orthogonalized_redundant_regressor():
    """
    Orthogonalised Q is orthogonal to 1, u, u^2/2 on [-1, 1]
    """
    basis = BasisSpec(2, RedundantSpec(1, "odd", orthogonalized=True))
    for k in range(3):
        inner, _ = quad(lambda u: basis_eval(basis, u)[3] * u ** k, -1, 1)
        assert abs(inner) < 1e-12
    transform = change_of_basis(basis)
    raw = np.array([1.0, 0.4, 0.08, 0.4 ** 3])
    assert np.allclose(transform @ raw, basis_eval(basis, 0.4))


def test_split_basis_columns_and_targets():
    """
    Split terms come as left and right pairs and need a side
    """
    basis = BasisSpec(2, split_from=1)
    assert basis.columns == ((0, None), (1, "left"), (1, "right"), (2, "left"), (2, "right"))
    assert target_index(basis, 0, "right") == 2
    assert target_index(basis, 1, "left") == 3
    assert np.allclose(basis_eval(basis, -0.5), [1.0, -0.5, 0.0, 0.125, 0.0])
    with pytest.raises(ValidationError):
        target_index(basis, 0)


def test_target_index_for_unsplit_basis():
    """
    Distribution function, density and derivative positions
    """
    basis = BasisSpec(2)
    assert [target_index(basis, d) for d in (-1, 0, 1)] == [0, 1, 2]
    with pytest.raises(ValidationError):
        target_index(basis, 2)


def test_scaling_matrix():
    """
    Upsilon_h has entries h^(-k)
    """
    assert np.allclose(scaling_vector(BasisSpec(2), 0.5), [1.0, 2.0, 4.0])
    assert np.allclose(scaling_matrix(BasisSpec(1), 0.25), np.diag([1.0, 4.0]))
    with pytest.raises(ValidationError):
        scaling_vector(BasisSpec(1), 0.0)


def test_derivative_basis():
    """
    P-dot(u) = (1, u, u^2/2)
    """
    assert np.allclose(derivative_basis(3, 2.0), [1.0, 2.0, 2.0])
    with pytest.raises(ValidationError):
        derivative_basis(0, 1.0)
