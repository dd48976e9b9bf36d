"""
Fit local module contains the local regression distribution
estimator: weighted least squares of EDF values on the local
basis around an evaluation point, its sandwich variance built
from per-observation influence vectors, pointwise confidence
intervals, grid evaluation and the single-constraint fit.

Matrices gamma, sigma and omega of a PointFit live in normalised
coordinates u = (x_i - x)/h; theta is reported in data units
(distribution function, density, derivatives) through Upsilon_h.
"""

from dataclasses import dataclass, field, replace
import logging
import numpy as np
from pandas import DataFrame
from scipy.stats import norm
from lrdensity.errors import (
    DegenerateVariance, InsufficientLocalData, NumericalFailure, SingularGram, ValidationError)
from lrdensity.estimation.basis_kernel import (
    BasisSpec, KernelSpec, basis_eval, kernel_eval, scaling_vector, target_index)
from lrdensity.estimation.edf import EdfValues, SortedSample
from lrdensity.lrdutils import check_alpha, check_grid, parallel_map, symmetric_inverse


@dataclass(frozen=True)
class FitConfig:
    """
    Estimator settings

    Parameters:
        kernel(KernelSpec): kernel
        basis(BasisSpec): local basis of the point estimate
        h(float): bandwidth in data units
        deriv(int): target, -1 for the distribution function,
        0 for the density, l for the l-th density derivative
        side(str|None): left or right, for split targets
        inference_basis(BasisSpec|None): higher-order basis for
        robust bias-corrected intervals
    """
    kernel: KernelSpec = KernelSpec()
    basis: BasisSpec = BasisSpec()
    h: float = 1.0
    deriv: int = 0
    side: str | None = None
    inference_basis: BasisSpec | None = None

    def __post_init__(self):
        if not self.h > 0:
            raise ValidationError(f"Bandwidth should be positive, got {self.h}")
        if self.deriv < -1:
            raise ValidationError(f"Derivative order should be at least -1, got {self.deriv}")
        target_index(self.basis, self.deriv, self.side)
        if self.inference_basis is not None:
            target_index(self.inference_basis, self.deriv, self.side)

    @property
    def index(self) -> int:
        """
        Position of the target coefficient
        """
        return target_index(self.basis, self.deriv, self.side)

    def for_inference(self) -> "FitConfig":
        """
        Configuration used for standard errors and intervals
        """
        if self.inference_basis is None:
            return self
        return replace(self, basis=self.inference_basis, inference_basis=None)


@dataclass
class PointFit:
    """
    Everything estimated at one evaluation point

    Parameters:
        x(float): evaluation point
        h(float): bandwidth
        basis(BasisSpec): basis used
        theta(np.ndarray): coefficients in data units
        theta_normalized(np.ndarray): coefficients in normalised coordinates
        gamma(np.ndarray): normalised Gram matrix
        sigma(np.ndarray): normalised meat matrix (1/n^2) sum psi psi'
        omega(np.ndarray): gamma^-1 sigma gamma^-1
        n_local(int): observations with |x_i - x| <= h
        n(int): sample size
        psi(np.ndarray|None): influence vectors in sorted order
        constrained(bool): whether a shape constraint is active
    """
    x: float
    h: float
    basis: BasisSpec
    theta: np.ndarray
    theta_normalized: np.ndarray
    gamma: np.ndarray
    sigma: np.ndarray
    omega: np.ndarray
    n_local: int
    n: int
    psi: np.ndarray | None = field(default=None, repr=False)
    constrained: bool = False

    @property
    def scaling(self) -> np.ndarray:
        """
        Diagonal of Upsilon_h
        """
        return scaling_vector(self.basis, self.h)

    @property
    def omega_data(self) -> np.ndarray:
        """
        Variance of theta in data units
        """
        return np.outer(self.scaling, self.scaling) * self.omega

    def variance(self, index: int) -> float:
        """
        Data-unit variance of one coefficient
        """
        return float(self.scaling[index] ** 2 * self.omega[index, index])


@dataclass(frozen=True)
class ConfidenceInterval:
    """
    Pointwise interval for one coefficient
    """
    estimate: float
    se: float
    lower: float
    upper: float


@dataclass(frozen=True)
class LocalWindow:
    """
    Observations inside [x - h, x + h]: sorted positions
    start..stop, normalised distances and kernel weights K(u)/h
    """
    start: int
    stop: int
    u: np.ndarray
    kernel_weights: np.ndarray

    @property
    def n_local(self) -> int:
        """
        Number of observations with |u| <= 1
        """
        return int(np.count_nonzero(np.abs(self.u) <= 1))


def local_window(s: SortedSample, kernel: KernelSpec, h: float, x: float) -> LocalWindow:
    """
    Finds the kernel window by binary search on the sorted data
    """
    start = int(np.searchsorted(s.values, x - h, side="left"))
    stop = int(np.searchsorted(s.values, x + h, side="right"))
    u = (s.values[start:stop] - x) / h
    return LocalWindow(start, stop, u, kernel_eval(kernel, u) / h)


def gamma_hat(s: SortedSample, cfg: FitConfig, x: float) -> np.ndarray:
    """
    (1/n) sum_i W_i R_i R_i' in normalised coordinates, summed over
    the local window; zero matrix without local data

    Arguments:
        s(SortedSample): sample
        cfg(FitConfig): settings
        x(float): evaluation point
    Returns:
        gamma(np.ndarray): Gram matrix
    """
    window = local_window(s, cfg.kernel, cfg.h, x)
    design = basis_eval(cfg.basis, window.u).reshape(-1, cfg.basis.dim)
    return (window.kernel_weights[:, None] * design).T @ design / s.n


def _influence(s: SortedSample, weighted_design: np.ndarray,
               local_edf: np.ndarray, window: LocalWindow) -> np.ndarray:
    # psi_i = (1/n)(w_i * sum_{local j: x_j >= x_i} W_j R_j - sum_j W_j R_j F_j)
    suffix = np.concatenate(
        [np.cumsum(weighted_design[::-1], axis=0)[::-1], np.zeros((1, weighted_design.shape[1]))])
    local_values = s.values[window.start:window.stop]
    rank = np.searchsorted(local_values, s.values, side="left")
    centre = weighted_design.T @ local_edf
    return (s.weights[:, None] * suffix[rank] - centre) / s.n


def psi_hat_all(s: SortedSample, edf: EdfValues, cfg: FitConfig, x: float) -> np.ndarray:
    """
    Influence vectors psi_i for every observation, from suffix sums
    over the local window

    Arguments:
        s(SortedSample): sample
        edf(EdfValues): EDF at the observations
        cfg(FitConfig): settings
        x(float): evaluation point
    Returns:
        psi(np.ndarray): array of shape (n, dim), sorted order
    """
    window = local_window(s, cfg.kernel, cfg.h, x)
    design = basis_eval(cfg.basis, window.u).reshape(-1, cfg.basis.dim)
    weighted_design = window.kernel_weights[:, None] * design
    return _influence(s, weighted_design, edf.values[window.start:window.stop], window)


def sigma_hat(psi: np.ndarray) -> np.ndarray:
    """
    (1/n^2) sum_i psi_i psi_i'
    """
    return psi.T @ psi / psi.shape[0] ** 2


def fit_point(s: SortedSample, edf: EdfValues, cfg: FitConfig, x: float) -> PointFit:
    """
    Local regression of the EDF on R((x_i - x)/h) with weights K/h

    Arguments:
        s(SortedSample): sample
        edf(EdfValues): EDF at the observations
        cfg(FitConfig): settings
        x(float): evaluation point
    Returns:
        fit(PointFit): estimates and variance ingredients
    """
    window = local_window(s, cfg.kernel, cfg.h, x)
    dim = cfg.basis.dim
    if window.n_local < dim:
        raise InsufficientLocalData(
            f"Only {window.n_local} observations near {x:.6g}, basis needs {dim}")
    design = basis_eval(cfg.basis, window.u).reshape(-1, dim)
    weighted_design = window.kernel_weights[:, None] * design
    gamma = weighted_design.T @ design / s.n
    gamma_inv = symmetric_inverse(gamma, SingularGram, f"Gram matrix at {x:.6g}")
    local_edf = edf.values[window.start:window.stop]
    theta_normalized = gamma_inv @ (weighted_design.T @ local_edf / s.n)
    psi = _influence(s, weighted_design, local_edf, window)
    sigma = sigma_hat(psi)
    omega = gamma_inv @ sigma @ gamma_inv
    return PointFit(
        x=float(x), h=cfg.h, basis=cfg.basis,
        theta=scaling_vector(cfg.basis, cfg.h) * theta_normalized,
        theta_normalized=theta_normalized,
        gamma=gamma, sigma=sigma, omega=(omega + omega.T) / 2,
        n_local=window.n_local, n=s.n, psi=psi)


def ci_pointwise(fit: PointFit, deriv: int, alpha: float, side: str | None = None
                 ) -> ConfidenceInterval:
    """
    Normal interval theta_l -+ z_(1-alpha/2) SE for the coefficient
    of f^(deriv); alpha = 1 gives a zero-width interval

    Arguments:
        fit(PointFit): fit supplying estimate and variance
        deriv(int): target derivative, -1 for the CDF
        alpha(float): level
        side(str|None): side of a split target
    Returns:
        interval(ConfidenceInterval): interval
    """
    check_alpha(alpha)
    index = target_index(fit.basis, deriv, side)
    normalized = fit.omega[index, index]
    scale = float(np.max(np.abs(np.diag(fit.omega))))
    if not normalized > 0 or normalized <= 1e-14 * scale:
        raise DegenerateVariance(f"Variance of coefficient {index} at {fit.x:.6g} is {normalized:.3g}")
    se = float(fit.scaling[index] * np.sqrt(normalized))
    estimate = float(fit.theta[index])
    quantile = float(norm.ppf(1 - alpha / 2))
    return ConfidenceInterval(estimate, se, estimate - quantile * se, estimate + quantile * se)


@dataclass
class GridFit:
    """
    Fits over an ordered grid

    Parameters:
        grid(np.ndarray): evaluation points
        cfg(FitConfig): settings
        fits(list[PointFit|None]): point estimate fits, None where flagged
        inference(list[PointFit|None]): fits used for standard errors
        (the same objects without an inference basis)
        failures(dict[int, str]): flagged points and reasons
    """
    grid: np.ndarray
    cfg: FitConfig
    fits: list[PointFit | None]
    inference: list[PointFit | None]
    failures: dict[int, str] = field(default_factory=dict)

    @property
    def succeeded(self) -> np.ndarray:
        """
        Mask of grid points with a fit
        """
        return np.array([i is not None for i in self.fits])

    def to_frame(self, alpha: float = 0.05) -> DataFrame:
        """
        Table with columns x, n_local, est, se, ci_lo, ci_hi;
        the estimate comes from the point fit, the interval is
        centred at the inference fit
        """
        rows = []
        for x, fit, inference in zip(self.grid, self.fits, self.inference):
            if fit is None:
                rows.append([x, 0, np.nan, np.nan, np.nan, np.nan])
                continue
            try:
                interval = ci_pointwise(inference, self.cfg.deriv, alpha, self.cfg.side)
            except DegenerateVariance:
                rows.append([x, fit.n_local, fit.theta[self.cfg.index], np.nan, np.nan, np.nan])
                continue
            rows.append([x, fit.n_local, fit.theta[self.cfg.index],
                         interval.se, interval.lower, interval.upper])
        return DataFrame(rows, columns=["x", "n_local", "est", "se", "ci_lo", "ci_hi"])


def _fit_with_inference(s: SortedSample, edf: EdfValues, cfg: FitConfig, x: float
                        ) -> tuple[PointFit | None, PointFit | None, str | None]:
    try:
        fit = fit_point(s, edf, cfg, x)
        inference = fit if cfg.inference_basis is None else fit_point(s, edf, cfg.for_inference(), x)
    except NumericalFailure as err:
        return None, None, f"{type(err).__name__}: {err}"
    return fit, inference, None


def fit_grid(s: SortedSample, edf: EdfValues, cfg: FitConfig, grid, workers: int = 1) -> GridFit:
    """
    Fits every grid point independently; points that fail are
    flagged with the reason instead of stopping the run

    Arguments:
        s(SortedSample): sample
        edf(EdfValues): EDF at the observations
        cfg(FitConfig): settings
        grid(array-like): sorted evaluation points
        workers(int): threads for data-parallel evaluation
    Returns:
        gridfit(GridFit): fits and failures
    """
    points = check_grid(grid)
    if points[0] < s.values[0] or points[-1] > s.values[-1]:
        logging.warning("Grid [%s, %s] reaches outside the data range [%s, %s]",
                        points[0], points[-1], s.values[0], s.values[-1])
    results = parallel_map(lambda x: _fit_with_inference(s, edf, cfg, x), points, workers)
    failures = {i: reason for i, (_, _, reason) in enumerate(results) if reason is not None}
    for i, reason in failures.items():
        logging.warning("Grid point %s flagged: %s", points[i], reason)
    if len(failures) == points.size:
        raise NumericalFailure(f"All {points.size} grid points failed, first: {failures[0]}")
    return GridFit(points, cfg, [i[0] for i in results], [i[1] for i in results], failures)


def local_objective(s: SortedSample, edf: EdfValues, cfg: FitConfig, x: float,
                    theta: np.ndarray) -> float:
    """
    Weighted least squares criterion (1/n) sum_i W_i (F_i - R_i'theta)^2
    for data-unit coefficients theta
    """
    window = local_window(s, cfg.kernel, cfg.h, x)
    design = basis_eval(cfg.basis, window.u).reshape(-1, cfg.basis.dim)
    residual = edf.values[window.start:window.stop] - design @ (theta / scaling_vector(cfg.basis, cfg.h))
    return float(np.sum(window.kernel_weights * residual ** 2) / s.n)


def fit_point_constrained(s: SortedSample, edf: EdfValues, cfg: FitConfig, x: float,
                          constraint: tuple[np.ndarray, float]) -> PointFit:
    """
    Fit subject to a single inequality a'theta >= b on the data-unit
    coefficients; when the unconstrained fit violates it, the
    equality-constrained solution theta_hat + G^-1 a (b - a'theta_hat)/(a'G^-1 a)
    is returned

    Arguments:
        s(SortedSample): sample
        edf(EdfValues): EDF at the observations
        cfg(FitConfig): settings
        x(float): evaluation point
        constraint(tuple[np.ndarray, float]): row a and bound b
    Returns:
        fit(PointFit): constrained fit
    """
    row, bound = np.asarray(constraint[0], dtype=float), float(constraint[1])
    if row.shape != (cfg.basis.dim,):
        raise ValidationError(f"Constraint row should have length {cfg.basis.dim}")
    fit = fit_point(s, edf, cfg, x)
    if row @ fit.theta >= bound:
        return fit
    scaling = fit.scaling
    row_normalized = row * scaling
    gamma_inv = symmetric_inverse(fit.gamma, SingularGram, f"Gram matrix at {x:.6g}")
    direction = gamma_inv @ row_normalized
    curvature = row_normalized @ direction
    if not curvature > 1e-14 * np.linalg.norm(row_normalized) ** 2 * np.max(np.diag(gamma_inv)):
        raise ValidationError("Constraint row lies in the null space of the Gram matrix")
    theta_normalized = fit.theta_normalized + direction * (bound - row_normalized @ fit.theta_normalized) / curvature
    theta = scaling * theta_normalized
    support = np.flatnonzero(row)
    if support.size == 1:
        theta[support[0]] = bound / row[support[0]]
        theta_normalized[support[0]] = theta[support[0]] / scaling[support[0]]
    logging.info("Constraint active at %s", x)
    return replace(fit, theta=theta, theta_normalized=theta_normalized, constrained=True)
