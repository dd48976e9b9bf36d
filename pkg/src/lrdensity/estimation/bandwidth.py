"""
Bandwidth module contains the rule-of-thumb bandwidth:
h = C(p, l) * scale * n^(-1/(2p+3)), where the constant balances
the interior bias and variance constants of the estimator under
a Gaussian reference density with unit scale.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import factorial, pi, sqrt
import logging
import numpy as np
from lrdensity.efficiency.mindist import asy_matrices, asy_variance_interior
from lrdensity.errors import NumericalFailure, ValidationError
from lrdensity.estimation.basis_kernel import BasisSpec, KernelSpec, basis_eval, kernel_eval
from lrdensity.estimation.edf import SortedSample
from lrdensity.lrdutils import robust_scale
from lrdensity.quadrature import adaptive_gauss

MIN_SAMPLE = 10


@dataclass(frozen=True)
class RotBandwidth:
    """
    Rule-of-thumb bandwidth with its ingredients

    Parameters:
        h(float): bandwidth
        p(int): polynomial order
        deriv(int): derivative order
        n(int): sample size
        constant(float): C(p, l) at unit scale
        scale(float): min(sd, IQR/1.349) of the sample
    """
    h: float
    p: int
    deriv: int
    n: int
    constant: float
    scale: float


def gaussian_roughness(r: int) -> float:
    """
    int (phi^(r))^2 for the standard normal density,
    (2r)! / (2^(2r+1) r! sqrt(pi))
    """
    return factorial(2 * r) / (2 ** (2 * r + 1) * factorial(r) * sqrt(pi))


def bias_constant(p: int, deriv: int, kernel: KernelSpec, k: int) -> float:
    """
    e_(l+1)' Gamma^-1 int R(u) u^k/k! K(u) du, the interior bias
    constant attached to the k-th order Taylor term of F
    """
    gamma, _, _ = asy_matrices(p, kernel)
    basis = BasisSpec(p)
    moments = adaptive_gauss(
        lambda u: basis_eval(basis, u).reshape(-1, basis.dim) * (u ** k / factorial(k) * kernel_eval(kernel, u))[:, None],
        -1.0, 1.0, kernel.breakpoints)
    return float(np.linalg.solve(gamma, moments)[deriv + 1])


@lru_cache(maxsize=64)
def rot_constant(p: int, deriv: int, kernel: KernelSpec = KernelSpec()) -> float:
    """
    C(p, l) = [(2l+1) V / (2(k-1-l) B^2 c_(k-1))]^(1/(2k-1)), k the
    first of p+1, p+2 with a nonzero bias constant B, V the interior
    variance constant and c_r the Gaussian roughness

    Arguments:
        p(int): polynomial order
        deriv(int): derivative order, 0 <= deriv <= p - 1
        kernel(KernelSpec): kernel
    Returns:
        constant(float): bandwidth constant at unit scale and n = 1
    """
    variance = asy_variance_interior(p, deriv, kernel)
    for k in (p + 1, p + 2):
        bias = bias_constant(p, deriv, kernel, k)
        if abs(bias) > 1e-10:
            break
    else:
        raise NumericalFailure(f"No leading bias term for p={p}, derivative {deriv}")
    ratio = (2 * deriv + 1) * variance / (2 * (k - 1 - deriv) * bias ** 2 * gaussian_roughness(k - 1))
    return float(ratio ** (1.0 / (2 * k - 1)))


def rot_bandwidth(s: SortedSample, p: int, deriv: int, kernel: KernelSpec = KernelSpec()) -> RotBandwidth:
    """
    Rule-of-thumb bandwidth h = C(p, l) scale n^(-1/(2p+3))

    Arguments:
        s(SortedSample): sample
        p(int): polynomial order
        deriv(int): derivative order
        kernel(KernelSpec): kernel
    Returns:
        bandwidth(RotBandwidth): bandwidth and ingredients
    """
    if s.n < MIN_SAMPLE:
        raise ValidationError(f"Rule-of-thumb bandwidth needs at least {MIN_SAMPLE} observations, got {s.n}")
    scale = robust_scale(s.values)
    if not scale > 0:
        raise ValidationError("Sample has no dispersion, bandwidth is undefined")
    constant = rot_constant(p, deriv, kernel)
    h = constant * scale * s.n ** (-1.0 / (2 * p + 3))
    logging.info("Rule-of-thumb bandwidth %.6g (p=%s, derivative %s, n=%s)", h, p, deriv, s.n)
    return RotBandwidth(h, p, deriv, s.n, constant, scale)
