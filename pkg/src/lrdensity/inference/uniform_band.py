"""
Uniform band module builds simultaneous confidence bands over a
grid: the cross-covariance of the estimator at two points from
influence vectors, the implied correlation matrix, a repaired
factorisation of it, Gaussian draws from counter-based streams
and the quantile of the supremum of their absolute values.
"""

from dataclasses import dataclass, field
from math import ceil
import logging
import numpy as np
from pandas import DataFrame
from scipy.stats import norm
from lrdensity.efficiency.mindist import Partition, md_contrast
from lrdensity.errors import (
    DegenerateVariance, FactorizationError, NumericalFailure, SingularGram, ValidationError)
from lrdensity.estimation.edf import EdfValues, SortedSample
from lrdensity.estimation.fit_local import FitConfig, GridFit, PointFit, psi_hat_all
from lrdensity.lrdutils import check_alpha, check_grid, parallel_map, symmetric_inverse

MAX_JITTER = 1e-4


@dataclass(frozen=True)
class BandConfig:
    """
    Band settings

    Parameters:
        grid(np.ndarray|None): evaluation points; None takes the grid
        of the fits the band is built from
        alpha(float): level, the band covers with probability 1 - alpha
        draws(int): Gaussian draws, at least 100
        seed(int): seed of the draw streams
        deriv(int): target derivative, -1 for the distribution function
        jitter_start(float): first diagonal jitter tried when the
        correlation matrix is not positive definite
        minimum_distance(bool): band for the minimum distance estimator
        (the fits must carry a redundant regressor)
    """
    grid: np.ndarray | None = None
    alpha: float = 0.05
    draws: int = 2000
    seed: int = 0
    deriv: int = 0
    jitter_start: float = 1e-10
    minimum_distance: bool = False

    def __post_init__(self):
        check_alpha(self.alpha, allow_one=False)
        if self.draws < 100:
            raise ValidationError(f"Band needs at least 100 draws, got {self.draws}")
        if self.seed < 0:
            raise ValidationError("Seed should be nonnegative")
        if not 0 < self.jitter_start <= MAX_JITTER:
            raise ValidationError(f"Jitter should lie in (0, {MAX_JITTER}]")
        if self.grid is not None:
            object.__setattr__(self, "grid", check_grid(self.grid))


@dataclass
class BandResult:
    """
    Simultaneous band over the grid

    Parameters:
        grid(np.ndarray): evaluation points
        estimate(np.ndarray): point estimates
        centre(np.ndarray): band centres (estimates of the inference fit)
        se(np.ndarray): standard errors
        halfwidth(np.ndarray): quantile * se
        quantile(float): critical value used
        simulated_quantile(float): sup-statistic quantile from the draws
        draws(int): draws used
        diagnostics(dict): correlation and factorisation repairs
    """
    grid: np.ndarray
    estimate: np.ndarray
    centre: np.ndarray
    se: np.ndarray
    halfwidth: np.ndarray
    quantile: float
    simulated_quantile: float
    draws: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def lower(self) -> np.ndarray:
        """
        Lower band
        """
        return self.centre - self.halfwidth

    @property
    def upper(self) -> np.ndarray:
        """
        Upper band
        """
        return self.centre + self.halfwidth

    def covers(self, truth: np.ndarray) -> bool:
        """
        Whether the band contains a function at every grid point
        """
        return bool(np.all((self.lower <= truth) & (truth <= self.upper)))

    def to_frame(self) -> DataFrame:
        """
        Table with columns x, est, se, band_lo, band_hi
        """
        return DataFrame({"x": self.grid, "est": self.estimate, "se": self.se,
                          "band_lo": self.lower, "band_hi": self.upper})


def cross_sigma_hat(s: SortedSample, edf: EdfValues, cfg: FitConfig, x: float, y: float) -> np.ndarray:
    """
    (1/n^2) sum_i psi_i(x) psi_i(y)', normalised coordinates

    Arguments:
        s(SortedSample): sample
        edf(EdfValues): EDF at the observations
        cfg(FitConfig): settings
        x(float): first point
        y(float): second point
    Returns:
        sigma(np.ndarray): dim x dim cross-covariance
    """
    psi_x = psi_hat_all(s, edf, cfg, x)
    psi_y = psi_x if y == x else psi_hat_all(s, edf, cfg, y)
    return psi_x.T @ psi_y / s.n ** 2


def _contrast(fit: PointFit, index: int, minimum_distance: bool) -> np.ndarray:
    if minimum_distance:
        return md_contrast(fit, Partition.for_basis(fit.basis), index)
    contrast = np.zeros(fit.basis.dim)
    contrast[index] = 1.0
    return contrast


def _scalar_influences(fits: list[PointFit], index: int, minimum_distance: bool,
                       workers: int = 1) -> np.ndarray:
    # s_k(i) = c_k' Gamma_k^-1 psi_i(x_k), one row per grid point
    def influence(fit: PointFit) -> np.ndarray:
        if fit.psi is None:
            raise ValidationError(f"Fit at {fit.x:.6g} carries no influence vectors")
        gamma_inv = symmetric_inverse(fit.gamma, SingularGram, f"Gram matrix at {fit.x:.6g}")
        return fit.psi @ (gamma_inv @ _contrast(fit, index, minimum_distance))

    return np.array(parallel_map(influence, fits, workers))


def correlation_matrix(gridfit: GridFit, deriv: int, minimum_distance: bool = False,
                       workers: int = 1) -> tuple[np.ndarray, dict]:
    """
    Correlation of the estimator of f^(deriv) across the grid,
    c'Omega(x, y)c / (SE(x) SE(y)), from the inference fits;
    the diagonal is exactly one and off-diagonal entries outside
    [-1, 1] are clipped

    Arguments:
        gridfit(GridFit): fits over the grid, none flagged
        deriv(int): target derivative
        minimum_distance(bool): use the minimum distance combination
        workers(int): threads
    Returns:
        correlation, diagnostics(tuple[np.ndarray, dict]): matrix and
        the largest clipped excess
    """
    if gridfit.failures:
        raise NumericalFailure(f"Band needs fits at every grid point, {len(gridfit.failures)} flagged")
    fits = gridfit.inference
    if deriv != gridfit.cfg.deriv:
        raise ValidationError(f"Fits target derivative {gridfit.cfg.deriv}, band asked for {deriv}")
    index = gridfit.cfg.for_inference().index
    influences = _scalar_influences(fits, index, minimum_distance, workers)
    covariance = influences @ influences.T / fits[0].n ** 2
    variances = np.diag(covariance).copy()
    scale = float(np.max(np.abs(variances)))
    degenerate = np.flatnonzero(~(variances > 1e-14 * scale))
    if degenerate.size or not scale > 0:
        point = gridfit.grid[degenerate[0]] if degenerate.size else gridfit.grid[0]
        raise DegenerateVariance(f"Variance at grid point {point:.6g} is not positive")
    sd = np.sqrt(variances)
    correlation = covariance / np.outer(sd, sd)
    correlation = (correlation + correlation.T) / 2
    excess = float(np.max(np.abs(correlation)) - 1.0)
    np.fill_diagonal(correlation, 1.0)
    correlation = np.clip(correlation, -1.0, 1.0)
    diagnostics = {"clipped_excess": max(excess, 0.0)}
    if excess > 1e-8:
        logging.warning("Correlation entries exceeded one by %.3g and were clipped", excess)
    return correlation, diagnostics


def factorize_correlation(corr: np.ndarray, jitter_start: float = 1e-10) -> tuple[np.ndarray, dict]:
    """
    Factor L with L L' equal to the (repaired) correlation matrix:
    Cholesky, then Cholesky with diagonal jitter growing tenfold from
    jitter_start up to 1e-4, then eigenvalue clipping at zero

    Arguments:
        corr(np.ndarray): correlation matrix
        jitter_start(float): first jitter
    Returns:
        factor, diagnostics(tuple[np.ndarray, dict]): factor and the
        repair applied
    """
    corr = np.asarray(corr, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise ValidationError("Correlation matrix should be square")
    if not np.allclose(corr, corr.T, atol=1e-12):
        raise ValidationError("Correlation matrix should be symmetric")
    try:
        return np.linalg.cholesky(corr), {"method": "cholesky", "jitter": 0.0}
    except np.linalg.LinAlgError:
        pass
    identity = np.eye(corr.shape[0])
    jitter = jitter_start
    while jitter <= MAX_JITTER * (1 + 1e-9):
        try:
            factor = np.linalg.cholesky(corr + jitter * identity)
        except np.linalg.LinAlgError:
            jitter *= 10
            continue
        logging.warning("Correlation matrix repaired with diagonal jitter %.1e", jitter)
        return factor, {"method": "jitter", "jitter": jitter}
    eigenvalues, eigenvectors = np.linalg.eigh(corr)
    clipped = np.maximum(eigenvalues, 0.0)
    if not np.any(clipped > 0):
        raise FactorizationError("Correlation matrix has no positive eigenvalue")
    logging.warning("Correlation matrix repaired by clipping %s eigenvalues, smallest %.3g",
                    int(np.sum(eigenvalues < 0)), eigenvalues[0])
    return eigenvectors * np.sqrt(clipped), {"method": "eigen_clip", "jitter": 0.0,
                                             "min_eigenvalue": float(eigenvalues[0])}


def draw_stream(seed: int, index: int) -> np.random.Generator:
    """
    Philox stream of one draw: key = seed, the draw index in the
    most significant counter word, so streams never overlap
    """
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, index]))


def gaussian_draws(factor: np.ndarray, draws: int, seed: int, workers: int = 1) -> np.ndarray:
    """
    Centred Gaussian vectors L z, one row per draw; row d depends only
    on (seed, d)

    Arguments:
        factor(np.ndarray): m x m factor
        draws(int): number of draws
        seed(int): seed
        workers(int): threads
    Returns:
        samples(np.ndarray): draws x m
    """
    size = factor.shape[1]
    normals = parallel_map(lambda d: draw_stream(seed, d).standard_normal(size), range(draws), workers)
    return np.array(normals) @ factor.T


def sup_quantile(statistics: np.ndarray, alpha: float) -> float:
    """
    Order statistic ceil((1 - alpha)(draws + 1)) of the statistics,
    clamped to the sample
    """
    ordered = np.sort(statistics)
    rank = min(max(ceil((1 - alpha) * (ordered.size + 1)), 1), ordered.size)
    return float(ordered[rank - 1])


def gp_sup_quantile(corr: np.ndarray, alpha: float, draws: int, seed: int,
                    jitter_start: float = 1e-10, workers: int = 1) -> float:
    """
    (1 - alpha) quantile of max_k |B_k| for a centred Gaussian vector
    B with the given correlation

    Arguments:
        corr(np.ndarray): correlation matrix
        alpha(float): level
        draws(int): number of draws
        seed(int): seed
        jitter_start(float): first jitter of the repair
        workers(int): threads
    Returns:
        quantile(float): simulated critical value
    """
    check_alpha(alpha, allow_one=False)
    factor, _ = factorize_correlation(corr, jitter_start)
    samples = gaussian_draws(factor, draws, seed, workers)
    return sup_quantile(np.max(np.abs(samples), axis=1), alpha)


def confidence_band(gridfit: GridFit, cfg: BandConfig, workers: int = 1) -> BandResult:
    """
    est(x) -+ q SE(x) over the grid, q the simulated sup-statistic
    quantile, never below the pointwise normal quantile

    Arguments:
        gridfit(GridFit): fits over the grid
        cfg(BandConfig): band settings
        workers(int): threads
    Returns:
        band(BandResult): band with diagnostics
    """
    if cfg.grid is not None and not np.array_equal(cfg.grid, gridfit.grid):
        raise ValidationError("Band grid differs from the grid of the fits")
    if gridfit.grid.size == 1:
        logging.warning("Band over a single point reduces to a pointwise interval")
    correlation, diagnostics = correlation_matrix(gridfit, cfg.deriv, cfg.minimum_distance, workers)
    factor, repair = factorize_correlation(correlation, cfg.jitter_start)
    diagnostics.update(repair)
    samples = gaussian_draws(factor, cfg.draws, cfg.seed, workers)
    simulated = sup_quantile(np.max(np.abs(samples), axis=1), cfg.alpha)
    pointwise = float(norm.ppf(1 - cfg.alpha / 2))
    quantile = max(simulated, pointwise)
    index = gridfit.cfg.for_inference().index
    estimate, centre, se = [], [], []
    for fit, inference in zip(gridfit.fits, gridfit.inference):
        contrast = _contrast(inference, index, cfg.minimum_distance)
        scale = inference.scaling[index]
        centre.append(scale * contrast @ inference.theta_normalized)
        se.append(scale * np.sqrt(contrast @ inference.omega @ contrast))
        if fit is inference:
            estimate.append(centre[-1])
        else:
            point = _contrast(fit, gridfit.cfg.index, cfg.minimum_distance)
            estimate.append(fit.scaling[gridfit.cfg.index] * point @ fit.theta_normalized)
    se = np.array(se)
    logging.info("Band quantile %.4f (pointwise %.4f) over %s points", quantile, pointwise, gridfit.grid.size)
    return BandResult(gridfit.grid, np.array(estimate), np.array(centre), se, quantile * se,
                      quantile, simulated, cfg.draws, diagnostics)
