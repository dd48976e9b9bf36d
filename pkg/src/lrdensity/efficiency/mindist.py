"""
Mindist module contains the minimum distance and short regression
estimators that exploit a redundant regressor with known zero
coefficient, and the interior asymptotic constants behind them:
sandwich variances by quadrature, the efficiency bound, the closed
forms available for the uniform kernel, the variational objective
for a candidate redundant regressor and the equivalent kernels.

All constants use the f(x) = 1 normalisation.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import factorial, isinf
import logging
from typing import Callable, Sequence
import numpy as np
from pandas import DataFrame
from scipy.stats import norm
from tqdm import tqdm
from lrdensity.errors import DegenerateVariance, SingularBlock, SingularGram, ValidationError
from lrdensity.estimation.basis_kernel import (
    BasisSpec, KernelSpec, RedundantSpec, basis_eval, kernel_eval, monomial_moment, target_index)
from lrdensity.estimation.fit_local import ConfidenceInterval, GridFit, PointFit
from lrdensity.lrdutils import symmetric_inverse
from lrdensity.quadrature import adaptive_gauss, tail_integrals

INTERIOR = (-1.0, 1.0)


@dataclass(frozen=True)
class Partition:
    """
    Split of the coefficient vector into theta_1 (intercept and P)
    and theta_2 (redundant block, known to be zero)
    """
    idx1: tuple[int, ...]
    idx2: tuple[int, ...]

    def __post_init__(self):
        if not self.idx2:
            raise ValidationError("Redundant block of the partition is empty")
        if set(self.idx1) & set(self.idx2):
            raise ValidationError("Partition blocks overlap")

    @classmethod
    def for_basis(cls, b: BasisSpec) -> "Partition":
        """
        Redundant regressor in the second block, everything else in the first
        """
        if b.q_index is None:
            raise ValidationError("Basis has no redundant regressor")
        return cls(tuple(i for i in range(b.dim) if i != b.q_index), (b.q_index,))


@dataclass(frozen=True)
class BlockEstimate:
    """
    Estimate of theta_1 with its variance, data units
    """
    theta: np.ndarray
    omega: np.ndarray
    scaling: np.ndarray

    def variance(self, position: int) -> float:
        """
        Variance of the coefficient at a position within theta_1
        """
        return float(self.omega[position, position])


def md_combine(theta: np.ndarray, omega: np.ndarray, part: Partition
               ) -> tuple[np.ndarray, np.ndarray]:
    """
    theta_1 - O_12 O_22^-1 theta_2 and O_11 - O_12 O_22^-1 O_21

    Arguments:
        theta(np.ndarray): full coefficient vector
        omega(np.ndarray): its variance
        part(Partition): blocks
    Returns:
        theta1_md, omega_md(tuple[np.ndarray, np.ndarray]): minimum distance
        estimate of theta_1 and its variance
    """
    first, second = list(part.idx1), list(part.idx2)
    block = omega[np.ix_(second, second)]
    symmetric_inverse(block, SingularBlock, "Redundant variance block")
    cross = omega[np.ix_(first, second)]
    coefficients = np.linalg.solve(block, cross.T).T
    theta_md = theta[first] - coefficients @ theta[second]
    omega_md = omega[np.ix_(first, first)] - coefficients @ cross.T
    return theta_md, (omega_md + omega_md.T) / 2


def md_estimate(fit: PointFit, part: Partition) -> BlockEstimate:
    """
    Optimal minimum distance estimator of theta_1 given theta_2 = 0

    Arguments:
        fit(PointFit): fit with the redundant regressor
        part(Partition): blocks
    Returns:
        estimate(BlockEstimate): data-unit estimate and variance
    """
    theta, omega = md_combine(fit.theta_normalized, fit.omega, part)
    scaling = fit.scaling[list(part.idx1)]
    return BlockEstimate(scaling * theta, np.outer(scaling, scaling) * omega, scaling)


def md_contrast(fit: PointFit, part: Partition, index: int) -> np.ndarray:
    """
    Normalised-coordinate vector c with c'theta_normalized equal to the
    minimum distance estimate of coefficient index
    """
    second = list(part.idx2)
    block = fit.omega[np.ix_(second, second)]
    symmetric_inverse(block, SingularBlock, "Redundant variance block")
    contrast = np.zeros(fit.basis.dim)
    contrast[index] = 1.0
    contrast[second] = -np.linalg.solve(block, fit.omega[index, second])
    return contrast


def short_estimate(fit: PointFit, part: Partition) -> BlockEstimate:
    """
    Short regression counterpart theta_1 + G_11^-1 G_12 theta_2,
    identical to refitting without the redundant columns

    Arguments:
        fit(PointFit): fit with the redundant regressor
        part(Partition): blocks
    Returns:
        estimate(BlockEstimate): data-unit estimate and variance
    """
    first, second = list(part.idx1), list(part.idx2)
    gamma_inv = symmetric_inverse(fit.gamma[np.ix_(first, first)], SingularBlock, "Gram block")
    theta = fit.theta_normalized[first] + gamma_inv @ fit.gamma[np.ix_(first, second)] @ fit.theta_normalized[second]
    omega = gamma_inv @ fit.sigma[np.ix_(first, first)] @ gamma_inv
    scaling = fit.scaling[first]
    return BlockEstimate(scaling * theta, np.outer(scaling, scaling) * (omega + omega.T) / 2, scaling)


def md_interval(fit: PointFit, deriv: int, alpha: float, side: str | None = None) -> ConfidenceInterval:
    """
    Normal interval for f^(deriv) from the minimum distance estimate
    and its variance

    Arguments:
        fit(PointFit): fit with the redundant regressor
        deriv(int): target derivative, -1 for the CDF
        alpha(float): level
        side(str|None): side of a split target
    Returns:
        interval(ConfidenceInterval): interval
    """
    part = Partition.for_basis(fit.basis)
    position = part.idx1.index(target_index(fit.basis, deriv, side))
    estimate = md_estimate(fit, part)
    variance = estimate.variance(position)
    if not variance > 0:
        raise DegenerateVariance(f"Minimum distance variance at {fit.x:.6g} is {variance:.3g}")
    se = float(np.sqrt(variance))
    value = float(estimate.theta[position])
    quantile = float(norm.ppf(1 - alpha / 2))
    return ConfidenceInterval(value, se, value - quantile * se, value + quantile * se)


def md_frame(gridfit: GridFit, alpha: float = 0.05) -> DataFrame:
    """
    Minimum distance counterpart of GridFit.to_frame: estimates from
    the point fits, intervals from the inference fits
    """
    cfg = gridfit.cfg
    rows = []
    for x, fit, inference in zip(gridfit.grid, gridfit.fits, gridfit.inference):
        if fit is None:
            rows.append([x, 0, np.nan, np.nan, np.nan, np.nan])
            continue
        try:
            estimate = md_interval(fit, cfg.deriv, alpha, cfg.side).estimate
            interval = md_interval(inference, cfg.deriv, alpha, cfg.side)
        except (DegenerateVariance, SingularBlock) as err:
            logging.warning("Minimum distance interval at %s skipped: %s", x, err)
            rows.append([x, fit.n_local, np.nan, np.nan, np.nan, np.nan])
            continue
        rows.append([x, fit.n_local, estimate, interval.se, interval.lower, interval.upper])
    return DataFrame(rows, columns=["x", "n_local", "est", "se", "ci_lo", "ci_hi"])


def _check_region(region: tuple[float, float]) -> tuple[float, float]:
    lower, upper = float(region[0]), float(region[1])
    if not -1.0 <= lower < upper <= 1.0:
        raise ValidationError(f"Integration region {region} should lie inside [-1, 1]")
    return lower, upper


def _check_deriv(p: int, deriv: int):
    if not 0 <= deriv <= p - 1:
        raise ValidationError(f"Derivative order {deriv} is not available with p={p}")


def min_kernel_integral(func: Callable[[np.ndarray], np.ndarray],
                        region: tuple[float, float],
                        breakpoints: Sequence[float] = ()) -> np.ndarray:
    """
    Double integral of min(u, v) f(u) f(v)' over region^2, through
    min(u, v) = lo + int_lo^hi 1(w <= u) 1(w <= v) dw, which leaves a
    single integral of products of tail integrals and no diagonal kink

    Arguments:
        func(Callable): vector-valued integrand f, shape (nodes, k)
        region(tuple[float, float]): integration region
        breakpoints(Sequence[float]): kinks of f
    Returns:
        matrix(np.ndarray): k x k matrix
    """
    lower, upper = region
    total = adaptive_gauss(func, lower, upper, breakpoints)

    def tails_outer(w: np.ndarray) -> np.ndarray:
        tails = tail_integrals(func, w, upper, breakpoints)
        return tails[:, :, None] * tails[:, None, :]

    return lower * np.outer(total, total) + adaptive_gauss(tails_outer, lower, upper, breakpoints)


@lru_cache(maxsize=256)
def asy_matrices(p: int, kernel: KernelSpec, redundant: RedundantSpec | None = None,
                 region: tuple[float, float] = INTERIOR) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Population Gamma = int R R' K, Sigma = double integral of
    min(u, v) R R' K K, and Omega = Gamma^-1 Sigma Gamma^-1 with f = 1

    Arguments:
        p(int): polynomial order
        kernel(KernelSpec): kernel
        redundant(RedundantSpec|None): redundant regressor
        region(tuple[float, float]): integration region inside [-1, 1]
    Returns:
        gamma, sigma, omega(tuple[np.ndarray, np.ndarray, np.ndarray]): matrices
    """
    lower, upper = _check_region(region)
    basis = BasisSpec(p, redundant)

    def weighted_basis(u: np.ndarray) -> np.ndarray:
        return basis_eval(basis, u).reshape(-1, basis.dim) * kernel_eval(kernel, u)[:, None]

    def gram(u: np.ndarray) -> np.ndarray:
        values = basis_eval(basis, u).reshape(-1, basis.dim)
        return weighted_basis(u)[:, :, None] * values[:, None, :]

    gamma = adaptive_gauss(gram, lower, upper, kernel.breakpoints)
    sigma = min_kernel_integral(weighted_basis, (lower, upper), kernel.breakpoints)
    gamma_inv = symmetric_inverse(gamma, SingularGram, "Population Gram matrix")
    omega = gamma_inv @ sigma @ gamma_inv
    return gamma, sigma, (omega + omega.T) / 2


def asy_variance_interior(p: int, deriv: int, kernel: KernelSpec,
                          redundant: RedundantSpec | None = None,
                          region: tuple[float, float] = INTERIOR) -> float:
    """
    Asymptotic variance constant of the f^(deriv) estimator: the
    diagonal entry of Omega without a redundant regressor, the Schur
    complement O_ll - O_lQ^2 / O_QQ (minimum distance) with one

    Arguments:
        p(int): polynomial order
        deriv(int): derivative order, 0 <= deriv <= p - 1
        kernel(KernelSpec): kernel
        redundant(RedundantSpec|None): redundant regressor
        region(tuple[float, float]): [-1, 1] inside the support,
        truncated near a boundary
    Returns:
        variance(float): constant multiplying f(x)
    """
    _check_deriv(p, deriv)
    _, _, omega = asy_matrices(p, kernel, redundant, tuple(region))
    index = deriv + 1
    if redundant is None:
        return float(omega[index, index])
    q = omega.shape[0] - 1
    return float(omega[index, index] - omega[index, q] ** 2 / omega[q, q])


def variance_bound_matrix(p: int, region: tuple[float, float] = INTERIOR) -> np.ndarray:
    """
    (int P-dot P-dot')^-1 over the region, from exact monomial moments
    """
    if p < 1:
        raise ValidationError("Variance bound needs p of at least 1")
    lower, upper = _check_region(region)
    gram = np.array([[monomial_moment(a + b, lower, upper) / (factorial(a) * factorial(b))
                      for b in range(p)] for a in range(p)])
    return np.linalg.inv(gram)


def variance_bound(p: int, deriv: int) -> float:
    """
    Efficiency bound nu_l = e_l'(int P-dot P-dot')^-1 e_l on [-1, 1]
    """
    _check_deriv(p, deriv)
    return float(variance_bound_matrix(p)[deriv, deriv])


# (a, b, c, e): variance (a m + b)/(c m + e), m the half-degree index of Q:
# Q = u^(2m+1) for even targets, Q = u^(2m) for odd targets
_CLOSED_FORMS = {
    (1, 0): (4, 11, 8, 20),
    (3, 0): (36, 135, 32, 112),
    (3, 1): (12, 39, 8, 20),
    (3, 2): (180, 855, 8, 28),
    (5, 0): (900, 4275, 512, 2304),
    (5, 1): (300, 1275, 32, 112),
    (5, 2): (8820, 50715, 32, 144),
    (5, 3): (6300, 33075, 8, 28),
    (5, 4): (396900, 2679075, 8, 36),
}
# interior odd/even blocks do not interact, so these orders reuse the table above
_CLOSED_ALIASES = {(2, 0): (1, 0), (4, 0): (3, 0), (4, 2): (3, 2)}


def md_asy_variance_closed(p: int, deriv: int, j: float) -> float:
    """
    Closed-form minimum distance variance for the uniform kernel with
    Q = u^(2j+1) (even deriv) or Q = u^(2j+2) (odd deriv); j = inf
    returns the limit

    Arguments:
        p(int): polynomial order
        deriv(int): derivative order
        j(float): redundant regressor index or math.inf
    Returns:
        variance(float): constant multiplying f(x)
    """
    key = _CLOSED_ALIASES.get((p, deriv), (p, deriv))
    if key not in _CLOSED_FORMS:
        raise ValidationError(f"No closed form for p={p}, derivative {deriv}")
    a, b, c, e = _CLOSED_FORMS[key]
    if isinf(j):
        return a / c
    m = j if deriv % 2 == 0 else j + 1
    degree = 2 * m + 1 if deriv % 2 == 0 else 2 * m
    if degree <= p:
        logging.warning("Q = u^%s is collinear with order %s, closed form is only formal", degree, p)
    return (a * m + b) / (c * m + e)


def _projected_redundant(p: int, kernel: KernelSpec, func: Callable[[np.ndarray], np.ndarray],
                         region: tuple[float, float]) -> Callable[[np.ndarray], np.ndarray]:
    # Q minus its K-weighted projection on (1, P)
    lower, upper = region
    basis = BasisSpec(p)

    def design(u: np.ndarray) -> np.ndarray:
        return basis_eval(basis, u).reshape(-1, basis.dim)

    gram = adaptive_gauss(
        lambda u: design(u)[:, :, None] * design(u)[:, None, :] * kernel_eval(kernel, u)[:, None, None],
        lower, upper, kernel.breakpoints)
    moments = adaptive_gauss(lambda u: design(u) * (np.asarray(func(u)) * kernel_eval(kernel, u))[:, None],
                             lower, upper, kernel.breakpoints)
    coefficients = np.linalg.solve(gram, moments)
    return lambda u: np.asarray(func(u), dtype=float) - design(u) @ coefficients


def optq_objective(p: int, deriv: int, kernel: KernelSpec,
                   q: Callable[[np.ndarray], np.ndarray],
                   region: tuple[float, float] = INTERIOR) -> float:
    """
    Variance reduction achieved by a redundant regressor Q:
    [double integral of P_l(u) Q(v) min(u, v) K K]^2 divided by the
    double integral of Q(u) Q(v) min(u, v) K K, after projecting Q on
    the K-orthogonal complement of (1, P)

    Arguments:
        p(int): polynomial order
        deriv(int): derivative order
        kernel(KernelSpec): kernel
        q(Callable): vectorised candidate Q
        region(tuple[float, float]): integration region
    Returns:
        objective(float): base variance minus minimum distance variance
    """
    _check_deriv(p, deriv)
    region = _check_region(region)
    lower, upper = region
    scale = float(adaptive_gauss(lambda u: np.asarray(q(u)) ** 2 * kernel_eval(kernel, u),
                                 lower, upper, kernel.breakpoints))
    if not scale > 0:
        raise ValidationError("Q vanishes on the kernel support")
    projected = _projected_redundant(p, kernel, q, region)
    residual = float(adaptive_gauss(lambda u: projected(u) ** 2 * kernel_eval(kernel, u),
                                    lower, upper, kernel.breakpoints))
    if residual <= 1e-12 * scale:
        return 0.0
    polynomial = BasisSpec(p)

    def design(u: np.ndarray) -> np.ndarray:
        return basis_eval(polynomial, u).reshape(-1, p + 1)[:, 1:]

    mass = float(adaptive_gauss(lambda u: kernel_eval(kernel, u), lower, upper, kernel.breakpoints))
    mean = adaptive_gauss(lambda u: design(u) * kernel_eval(kernel, u)[:, None],
                          lower, upper, kernel.breakpoints) / mass

    def centred(u: np.ndarray) -> np.ndarray:
        return design(u) - mean

    gram = adaptive_gauss(
        lambda u: centred(u)[:, :, None] * centred(u)[:, None, :] * kernel_eval(kernel, u)[:, None, None],
        lower, upper, kernel.breakpoints)
    loading = np.linalg.solve(gram, np.eye(p)[deriv])

    def pair(u: np.ndarray) -> np.ndarray:
        weights = kernel_eval(kernel, u)
        return np.stack([(centred(u) @ loading) * weights, projected(u) * weights], axis=-1)

    matrix = min_kernel_integral(pair, region, kernel.breakpoints)
    if not matrix[1, 1] > 0:
        raise ValidationError("Projected Q has zero variance contribution")
    return float(matrix[0, 1] ** 2 / matrix[1, 1])


def equivalent_kernel(p: int, deriv: int, kernel: KernelSpec,
                      redundant: RedundantSpec | None, grid) -> np.ndarray:
    """
    Kernel phi with the (minimum distance) estimator of f^(deriv)
    behaving to first order as (1/(n h^(deriv+1))) sum phi((x_i - x)/h):
    phi(u) = c'Gamma^-1 int_u^1 R(v) K(v) dv, with c the target
    coordinate, corrected by -O_lQ/O_QQ on Q for minimum distance

    Arguments:
        p(int): polynomial order
        deriv(int): derivative order
        kernel(KernelSpec): kernel
        redundant(RedundantSpec|None): redundant regressor
        grid(array-like): points in [-1, 1], at least 64 of them
    Returns:
        values(np.ndarray): phi on the grid, zero outside [-1, 1]
    """
    _check_deriv(p, deriv)
    points = np.asarray(grid, dtype=float)
    if points.size < 64:
        raise ValidationError(f"Equivalent kernel grid has {points.size} points, at least 64 needed")
    gamma, _, omega = asy_matrices(p, kernel, redundant, INTERIOR)
    basis = BasisSpec(p, redundant)
    index = deriv + 1
    contrast = np.zeros(basis.dim)
    contrast[index] = 1.0
    if redundant is not None:
        q = basis.q_index
        contrast[q] = -omega[index, q] / omega[q, q]
    loading = np.linalg.solve(gamma, contrast)

    def weighted_basis(u: np.ndarray) -> np.ndarray:
        return basis_eval(basis, u).reshape(-1, basis.dim) * kernel_eval(kernel, u)[:, None]

    inside = np.abs(points) <= 1
    values = np.zeros_like(points)
    if np.any(inside):
        values[inside] = tail_integrals(weighted_basis, points[inside], 1.0, kernel.breakpoints) @ loading
    return values


def minimum_variance_kernel(p: int, deriv: int, grid) -> np.ndarray:
    """
    Kernel attaining the bound: phi(u) = P-dot(u)'(int P-dot P-dot')^-1 e_l
    on [-1, 1], zero outside
    """
    _check_deriv(p, deriv)
    points = np.asarray(grid, dtype=float)
    loading = variance_bound_matrix(p)[:, deriv]
    design = np.stack([points ** k / factorial(k) for k in range(p)], axis=-1)
    return np.where(np.abs(points) <= 1, design @ loading, 0.0)


@dataclass
class AsyVarReport:
    """
    Interior constants for one configuration

    Parameters:
        p(int): polynomial order
        deriv(int): derivative order
        kernel(KernelSpec): kernel
        j(int|None): redundant regressor index
        var_base(float): constant of the plain estimator
        var_md(float|None): constant of the minimum distance estimator
        bound(float): efficiency bound
        grid(np.ndarray): grid of the equivalent kernel
        equivalent_kernel(np.ndarray): equivalent kernel of the
        minimum distance estimator, or of the plain one without j
    """
    p: int
    deriv: int
    kernel: KernelSpec
    j: int | None
    var_base: float
    var_md: float | None
    bound: float
    grid: np.ndarray
    equivalent_kernel: np.ndarray


def asy_var_report(p: int, deriv: int, kernel: KernelSpec, j: int | None = None,
                   points: int = 257) -> AsyVarReport:
    """
    Collects base, minimum distance and bound constants together with
    the equivalent kernel on an equally spaced grid over [-1, 1]
    """
    redundant = None if j is None else RedundantSpec.for_derivative(j, deriv)
    grid = np.linspace(-1.0, 1.0, points)
    return AsyVarReport(
        p, deriv, kernel, j,
        var_base=asy_variance_interior(p, deriv, kernel),
        var_md=None if redundant is None else asy_variance_interior(p, deriv, kernel, redundant),
        bound=variance_bound(p, deriv),
        grid=grid,
        equivalent_kernel=equivalent_kernel(p, deriv, kernel, redundant, grid))


def variance_table(kernels: Sequence[str] = ("uniform", "triangular", "epanechnikov"),
                   progress: bool = False) -> DataFrame:
    """
    Variance comparison table: density with p = 1..4 and first
    derivative with p = 2..5 for every kernel, plus the bound rows

    Arguments:
        kernels(Sequence[str]): kernel names
        progress(bool): show a progress bar
    Returns:
        table(DataFrame): columns panel, estimator, p, deriv, variance
    """
    cells = [("density", 0, p) for p in range(1, 5)] + [("derivative", 1, p) for p in range(2, 6)]
    rows = []
    for panel, deriv, p in tqdm(cells, disable=not progress, desc="variance table"):
        for kind in kernels:
            rows.append([panel, kind, p, deriv, asy_variance_interior(p, deriv, KernelSpec(kind))])
        rows.append([panel, "bound", p, deriv, variance_bound(p, deriv)])
    logging.info("Variance table computed for %s", ", ".join(kernels))
    return DataFrame(rows, columns=["panel", "estimator", "p", "deriv", "variance"])


def md_variance_sweep(p: int, deriv: int, kernel: KernelSpec, j_values: Sequence[int]) -> DataFrame:
    """
    Minimum distance constants across j, with closed forms where known

    Returns:
        table(DataFrame): columns j, degree, var_md, closed_form
    """
    rows = []
    for j in j_values:
        redundant = RedundantSpec.for_derivative(j, deriv)
        try:
            closed = md_asy_variance_closed(p, deriv, j) if kernel.kind == "uniform" else np.nan
        except ValidationError:
            closed = np.nan
        rows.append([j, redundant.degree, asy_variance_interior(p, deriv, kernel, redundant), closed])
    return DataFrame(rows, columns=["j", "degree", "var_md", "closed_form"])


def equivalent_kernel_table(p: int, deriv: int, kernel: KernelSpec, j_values: Sequence[int],
                            points: int = 257) -> DataFrame:
    """
    Equivalent kernels on [-1, 1]: column base for the plain
    estimator and one column j=<j> per redundant regressor
    """
    grid = np.linspace(-1.0, 1.0, points)
    table = DataFrame({"u": grid, "base": equivalent_kernel(p, deriv, kernel, None, grid)})
    for j in j_values:
        table[f"j={j}"] = equivalent_kernel(p, deriv, kernel, RedundantSpec.for_derivative(j, deriv), grid)
    return table
