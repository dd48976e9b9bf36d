"""
Experiments module runs the Monte Carlo studies: pointwise and
uniform coverage, base against minimum distance variance,
boundary behaviour against a plain kernel density estimator,
and the linearised process used to check the strong
approximation.

Every replication draws from its own stream default_rng([seed, rep]),
so results do not depend on the order or the number of workers.
"""

from dataclasses import dataclass, field, replace
import logging
import numpy as np
from pandas import DataFrame
from scipy.stats import norm
from lrdensity.efficiency.mindist import Partition, asy_variance_interior, md_estimate
from lrdensity.errors import NumericalFailure, SingularGram, ValidationError
from lrdensity.estimation.bandwidth import rot_bandwidth
from lrdensity.estimation.basis_kernel import (
    BasisSpec, KernelSpec, RedundantSpec, basis_eval, kernel_eval)
from lrdensity.estimation.edf import SortedSample, edf_at_points, sort_sample
from lrdensity.estimation.fit_local import FitConfig, ci_pointwise, fit_grid, fit_point
from lrdensity.estimation.l2fit import kde
from lrdensity.inference.uniform_band import BandConfig, confidence_band
from lrdensity.lrdutils import check_alpha, parallel_map, symmetric_inverse
from lrdensity.quadrature import adaptive_gauss, tail_integrals
from lrdensity.simulation.dgp import DgpSpec


@dataclass
class ExperimentResult:
    """
    Summary of a Monte Carlo experiment

    Parameters:
        coverage(float): share of replications whose interval (band)
        covers the truth
        bias(float): mean estimate minus truth
        sd(float): standard deviation of the estimates
        mean_se(float): mean standard error
        reps(int): replications run
        seed(int): seed
        failures(int): replications dropped after a numerical failure
        details(DataFrame): one row per successful replication
    """
    coverage: float
    bias: float
    sd: float
    mean_se: float
    reps: int
    seed: int
    failures: int = 0
    details: DataFrame = field(default_factory=DataFrame, repr=False)


def rep_generator(seed: int, rep: int) -> np.random.Generator:
    """
    Stream of one replication
    """
    return np.random.default_rng([seed, rep])


def _draw(dgp: DgpSpec, n: int, seed: int, rep: int) -> tuple[SortedSample, np.random.Generator]:
    rng = rep_generator(seed, rep)
    sample = sort_sample(dgp.sample(n, rng))
    return sample, rng


def _with_bandwidth(cfg: FitConfig, sample: SortedSample, rot: bool) -> FitConfig:
    if not rot:
        return cfg
    bandwidth = rot_bandwidth(sample, cfg.basis.p, max(cfg.deriv, 0), cfg.kernel)
    return replace(cfg, h=bandwidth.h)


def _summarise(details: DataFrame, reps: int, seed: int) -> ExperimentResult:
    if details.empty:
        raise NumericalFailure(f"All {reps} replications failed")
    errors = details["est"] - details["truth"]
    return ExperimentResult(
        coverage=float(details["covered"].mean()), bias=float(errors.mean()),
        sd=float(details["est"].std(ddof=1)) if len(details) > 1 else 0.0,
        mean_se=float(details["se"].mean()), reps=reps, seed=seed,
        failures=reps - len(details), details=details)


def run_pointwise_coverage(dgp: DgpSpec, n: int, reps: int, cfg: FitConfig, x: float, alpha: float,
                           seed: int, rot: bool = False, workers: int = 1,
                           progress: bool = False) -> ExperimentResult:
    """
    Coverage of the pointwise interval for f^(deriv)(x); with an
    inference basis the interval is the robust bias-corrected one

    Arguments:
        dgp(DgpSpec): data generating process
        n(int): sample size
        reps(int): replications
        cfg(FitConfig): estimator settings
        x(float): evaluation point
        alpha(float): level
        seed(int): seed
        rot(bool): rule-of-thumb bandwidth per replication instead of cfg.h
        workers(int): threads
        progress(bool): progress bar
    Returns:
        result(ExperimentResult): coverage and summaries
    """
    check_alpha(alpha)
    truth = float(dgp.truth(x, cfg.deriv, cfg.side))

    def replication(rep: int) -> list | None:
        sample, _ = _draw(dgp, n, seed, rep)
        try:
            rep_cfg = _with_bandwidth(cfg, sample, rot)
            edf = edf_at_points(sample)
            fit = fit_point(sample, edf, rep_cfg, x)
            inference = fit if rep_cfg.inference_basis is None else fit_point(sample, edf, rep_cfg.for_inference(), x)
            interval = ci_pointwise(inference, rep_cfg.deriv, alpha, rep_cfg.side)
        except (NumericalFailure, ValidationError) as err:
            logging.debug("Replication %s dropped: %s", rep, err)
            return None
        covered = interval.lower <= truth <= interval.upper
        return [rep, rep_cfg.h, fit.theta[rep_cfg.index], truth, interval.se, covered]

    rows = [i for i in parallel_map(replication, range(reps), workers, progress, "pointwise coverage") if i]
    details = DataFrame(rows, columns=["rep", "h", "est", "truth", "se", "covered"])
    result = _summarise(details, reps, seed)
    logging.info("Pointwise coverage %.3f over %s replications", result.coverage, len(details))
    return result


def run_uniform_coverage(dgp: DgpSpec, n: int, reps: int, cfg: FitConfig, band_cfg: BandConfig,
                         seed: int, rot: bool = False, workers: int = 1,
                         progress: bool = False) -> ExperimentResult:
    """
    Share of replications whose band covers the truth at every grid
    point; each replication simulates its band quantile with a seed
    drawn from its own stream

    Arguments:
        dgp(DgpSpec): data generating process
        n(int): sample size
        reps(int): replications
        cfg(FitConfig): estimator settings
        band_cfg(BandConfig): band settings with the grid
        seed(int): seed
        rot(bool): rule-of-thumb bandwidth per replication
        workers(int): threads
        progress(bool): progress bar
    Returns:
        result(ExperimentResult): simultaneous coverage; bias, sd and
        mean_se are averaged over the grid
    """
    if band_cfg.grid is None:
        raise ValidationError("Uniform coverage needs the band grid")
    grid = band_cfg.grid
    truth = np.asarray(dgp.truth(grid, cfg.deriv, cfg.side), dtype=float)
    z = float(norm.ppf(1 - band_cfg.alpha / 2))

    def replication(rep: int) -> list | None:
        sample, rng = _draw(dgp, n, seed, rep)
        try:
            rep_cfg = _with_bandwidth(cfg, sample, rot)
            gridfit = fit_grid(sample, edf_at_points(sample), rep_cfg, grid)
            band = confidence_band(gridfit, replace(band_cfg, seed=int(rng.integers(2 ** 32)), deriv=cfg.deriv))
        except (NumericalFailure, ValidationError) as err:
            logging.debug("Replication %s dropped: %s", rep, err)
            return None
        pointwise = np.abs(band.centre - truth) <= z * band.se
        return [rep, rep_cfg.h, float(np.mean(band.estimate)), float(np.mean(truth)),
                float(np.mean(band.se)), band.covers(truth), float(np.mean(pointwise)),
                band.quantile, bool(np.all(band.halfwidth >= z * band.se))]

    rows = [i for i in parallel_map(replication, range(reps), workers, progress, "uniform coverage") if i]
    details = DataFrame(rows, columns=["rep", "h", "est", "truth", "se", "covered",
                                       "pointwise_share", "quantile", "band_contains_ci"])
    result = _summarise(details, reps, seed)
    logging.info("Uniform coverage %.3f over %s replications", result.coverage, len(details))
    return result


def run_efficiency(dgp: DgpSpec, n: int, reps: int, p: int, deriv: int, j_list, x: float, seed: int,
                   h: float, kernel: KernelSpec = KernelSpec("uniform"), workers: int = 1,
                   progress: bool = False) -> DataFrame:
    """
    Monte Carlo variances of n h^(2 deriv + 1) scaled estimates of
    f^(deriv)(x), plain and minimum distance for every j, next to the
    asymptotic constants f(x) V

    Arguments:
        dgp(DgpSpec): data generating process
        n(int): sample size
        reps(int): replications
        p(int): polynomial order
        deriv(int): derivative order
        j_list(Iterable[int]): redundant regressor indices
        x(float): interior evaluation point
        seed(int): seed
        h(float): bandwidth
        kernel(KernelSpec): kernel
        workers(int): threads
        progress(bool): progress bar
    Returns:
        table(DataFrame): estimator, j, mc_variance, asy_variance,
        mc_ratio, asy_ratio
    """
    j_list = list(j_list)
    base_cfg = FitConfig(kernel, BasisSpec(p), h, deriv)
    md_cfgs = [FitConfig(kernel, BasisSpec(p, RedundantSpec.for_derivative(j, deriv)), h, deriv) for j in j_list]
    index = deriv + 1

    def replication(rep: int) -> list[float] | None:
        sample, _ = _draw(dgp, n, seed, rep)
        edf = edf_at_points(sample)
        try:
            estimates = [fit_point(sample, edf, base_cfg, x).theta[index]]
            for md_cfg in md_cfgs:
                fit = fit_point(sample, edf, md_cfg, x)
                estimates.append(md_estimate(fit, Partition.for_basis(md_cfg.basis)).theta[index])
        except NumericalFailure as err:
            logging.debug("Replication %s dropped: %s", rep, err)
            return None
        return estimates

    rows = [i for i in parallel_map(replication, range(reps), workers, progress, "efficiency") if i]
    if len(rows) < 2:
        raise NumericalFailure("Too few successful replications for a variance")
    estimates = np.array(rows)
    scale = n * h ** (2 * deriv + 1)
    mc_variance = scale * np.var(estimates, axis=0, ddof=1)
    density = float(dgp.pdf(x))
    asy = [density * asy_variance_interior(p, deriv, kernel)]
    for md_cfg in md_cfgs:
        asy.append(density * asy_variance_interior(p, deriv, kernel, md_cfg.basis.redundant))
    table = DataFrame({"estimator": ["base"] + ["md"] * len(j_list), "j": [np.nan] + j_list,
                       "mc_variance": mc_variance, "asy_variance": asy})
    table["mc_ratio"] = table["mc_variance"] / table["mc_variance"].iloc[0]
    table["asy_ratio"] = table["asy_variance"] / table["asy_variance"].iloc[0]
    return table


def run_boundary_experiment(dgp: DgpSpec, n: int, reps: int, cfg: FitConfig, x: float, seed: int,
                            kde_kernel: KernelSpec = KernelSpec("uniform"), workers: int = 1,
                            progress: bool = False) -> DataFrame:
    """
    Local regression density estimate against a plain kernel density
    estimate with the same bandwidth at a (boundary) point

    Returns:
        table(DataFrame): estimator, mean, bias, sd, mc_se, truth
    """
    if cfg.deriv != 0:
        raise ValidationError("Boundary experiment compares density estimates")
    truth = float(dgp.pdf(x))

    def replication(rep: int) -> tuple[float, float] | None:
        sample, _ = _draw(dgp, n, seed, rep)
        try:
            local = fit_point(sample, edf_at_points(sample), cfg, x).theta[cfg.index]
        except NumericalFailure:
            return None
        return local, kde(sample, kde_kernel, cfg.h, x)

    rows = [i for i in parallel_map(replication, range(reps), workers, progress, "boundary") if i]
    if len(rows) < 2:
        raise NumericalFailure("Too few successful replications")
    estimates = np.array(rows)
    means = estimates.mean(axis=0)
    sds = estimates.std(axis=0, ddof=1)
    return DataFrame({"estimator": ["local_regression", "kde"], "mean": means, "bias": means - truth,
                      "sd": sds, "mc_se": sds / np.sqrt(len(rows)), "truth": truth})


@dataclass(frozen=True)
class LinearizedProcess:
    """
    Population ingredients of the linearised statistic at one point

    Parameters:
        x(float): evaluation point
        loading(np.ndarray): Gamma^-1 c / sqrt(c'Gamma^-1 Sigma Gamma^-1 c)
        centre(np.ndarray): m = int R K F f du
        h(float): bandwidth
        basis(BasisSpec): basis
    """
    x: float
    loading: np.ndarray
    centre: np.ndarray
    h: float
    basis: BasisSpec


def linearized_process(dgp: DgpSpec, cfg: FitConfig, x: float) -> LinearizedProcess:
    """
    Population Gamma = int R R' K f(x + h u) du and the variance of
    T(x_i) = int_{u >= (x_i - x)/h} R K f du, with f and F the truth

    Arguments:
        dgp(DgpSpec): data generating process
        cfg(FitConfig): estimator settings
        x(float): evaluation point
    Returns:
        process(LinearizedProcess): normalised loading and centre
    """
    basis, kernel, h = cfg.basis, cfg.kernel, cfg.h
    kinks = tuple(sorted({*kernel.breakpoints, *((b - x) / h for b in dgp.breakpoints)}))

    def weighted(u: np.ndarray) -> np.ndarray:
        values = basis_eval(basis, u).reshape(-1, basis.dim)
        return values * (kernel_eval(kernel, u) * dgp.pdf(x + h * u))[:, None]

    def gram(u: np.ndarray) -> np.ndarray:
        return weighted(u)[:, :, None] * basis_eval(basis, u).reshape(-1, basis.dim)[:, None, :]

    gamma = adaptive_gauss(gram, -1.0, 1.0, kinks)
    gamma_inv = symmetric_inverse(gamma, SingularGram, f"Population Gram matrix at {x:.6g}")
    total = adaptive_gauss(weighted, -1.0, 1.0, kinks)
    centre = adaptive_gauss(lambda u: weighted(u) * dgp.cdf(x + h * u)[:, None], -1.0, 1.0, kinks)

    def spread(u: np.ndarray) -> np.ndarray:
        deviation = tail_integrals(weighted, u, 1.0, kinks) - centre
        return deviation[:, :, None] * deviation[:, None, :] * (h * dgp.pdf(x + h * u))[:, None, None]

    below = total - centre
    sigma = (float(dgp.cdf(x - h)) * np.outer(below, below)
             + (1 - float(dgp.cdf(x + h))) * np.outer(centre, centre)
             + adaptive_gauss(spread, -1.0, 1.0, kinks))
    contrast = gamma_inv[:, cfg.index]
    variance = float(contrast @ sigma @ contrast)
    if not variance > 0:
        raise NumericalFailure(f"Linearised variance at {x:.6g} is not positive")
    return LinearizedProcess(float(x), contrast / np.sqrt(variance), centre, h, basis)


def linearized_process_eval(dgp: DgpSpec, cfg: FitConfig, x: float, sample,
                            process: LinearizedProcess | None = None) -> float:
    """
    (1/sqrt(n)) sum_i K_(h,x)(x_i), the linearised studentised
    statistic with population ingredients

    Arguments:
        dgp(DgpSpec): data generating process
        cfg(FitConfig): estimator settings
        x(float): evaluation point
        sample(array-like|SortedSample): data
        process(LinearizedProcess|None): precomputed ingredients
    Returns:
        value(float): linearised statistic
    """
    process = process or linearized_process(dgp, cfg, x)
    values = sample.values if isinstance(sample, SortedSample) else np.asarray(sample, dtype=float)
    contributions = linearized_contributions(dgp, cfg, process, values)
    return float(np.sum(contributions) / np.sqrt(values.size))


def linearized_contributions(dgp: DgpSpec, cfg: FitConfig, process: LinearizedProcess,
                             values: np.ndarray) -> np.ndarray:
    """
    K_(h,x)(x_i) for every observation; mean zero under the truth
    """
    h, x = process.h, process.x
    kinks = tuple(sorted({*cfg.kernel.breakpoints, *((b - x) / h for b in dgp.breakpoints)}))

    def weighted(u: np.ndarray) -> np.ndarray:
        basis_values = basis_eval(process.basis, u).reshape(-1, process.basis.dim)
        return basis_values * (kernel_eval(cfg.kernel, u) * dgp.pdf(x + h * u))[:, None]

    u = np.clip((values - x) / h, -1.0, 1.0)
    tails = tail_integrals(weighted, u, 1.0, kinks)
    return (tails - process.centre) @ process.loading


def studentized_process(s: SortedSample, cfg: FitConfig, x: float, truth: float) -> float:
    """
    (estimate - truth) / SE at x, the feasible statistic the
    linearised one approximates
    """
    fit = fit_point(s, edf_at_points(s), cfg, x)
    interval = ci_pointwise(fit, cfg.deriv, 1.0, cfg.side)
    return (interval.estimate - truth) / interval.se


def process_gap(dgp: DgpSpec, n: int, cfg: FitConfig, grid, seed: int, rep: int = 0) -> float:
    """
    sup over the grid of |T(x) - linearised T(x)| for one sample
    """
    sample, _ = _draw(dgp, n, seed, rep)
    gaps = []
    for x in np.asarray(grid, dtype=float):
        truth = float(dgp.truth(x, cfg.deriv, cfg.side))
        gaps.append(abs(studentized_process(sample, cfg, x, truth)
                        - linearized_process_eval(dgp, cfg, x, sample)))
    return float(max(gaps))


def run_process_check(dgp: DgpSpec, n: int, reps: int, cfg: FitConfig, x: float, seed: int,
                      workers: int = 1, progress: bool = False) -> DataFrame:
    """
    Feasible statistic T(x) next to its linearisation per replication;
    the linearised column should have mean 0 and variance 1

    Returns:
        table(DataFrame): rep, studentized, linearized, gap
    """
    truth = float(dgp.truth(x, cfg.deriv, cfg.side))
    process = linearized_process(dgp, cfg, x)

    def replication(rep: int) -> list | None:
        sample, _ = _draw(dgp, n, seed, rep)
        linear = linearized_process_eval(dgp, cfg, x, sample, process)
        try:
            feasible = studentized_process(sample, cfg, x, truth)
        except NumericalFailure:
            return None
        return [rep, feasible, linear, abs(feasible - linear)]

    rows = [i for i in parallel_map(replication, range(reps), workers, progress, "linearised process") if i]
    table = DataFrame(rows, columns=["rep", "studentized", "linearized", "gap"])
    logging.info("Linearised process: mean %.4f, variance %.4f over %s replications",
                 table["linearized"].mean(), table["linearized"].var(ddof=1), len(table))
    return table
