"""
Pipeline module turns a JSON configuration into a RunConfig
and runs one subcommand: fit, band, efficiency, weights,
ivcheck or simulate, saving every result table with its
JSON sidecar.
"""
from dataclasses import asdict, dataclass, field, fields
import json
import logging
from os import mkdir
from os.path import isdir
import numpy as np
from pandas import DataFrame
from lrdensity.data.data_resources import config
from lrdensity.data_loading import ColumnMap, ingest_csv
from lrdensity.efficiency.mindist import (
    equivalent_kernel_table, md_frame, md_interval, md_variance_sweep, variance_table)
from lrdensity.errors import NumericalFailure, ValidationError
from lrdensity.estimation.bandwidth import rot_bandwidth
from lrdensity.estimation.basis_kernel import BasisSpec, KernelSpec, RedundantSpec
from lrdensity.estimation.edf import EdfValues, SortedSample, edf_at_points, sort_sample
from lrdensity.estimation.fit_local import FitConfig, PointFit, ci_pointwise, fit_grid
from lrdensity.estimation.l2fit import DesignSpec, l2_fit_point, nd_estimate
from lrdensity.inference.uniform_band import BandConfig, confidence_band
from lrdensity.lrdutils import make_grid, parallel_map
from lrdensity.output import save_table
from lrdensity.program_eval.logit import expand_covariates
from lrdensity.program_eval.weighting import (
    PanelData, iv_band_diagnostic, weights_complier, weights_counterfactual,
    weights_iv_validity, weights_subgroup)
from lrdensity.simulation.dgp import DgpSpec
from lrdensity.simulation.experiments import (
    run_boundary_experiment, run_efficiency, run_pointwise_coverage,
    run_process_check, run_uniform_coverage)

COMMANDS = ("fit", "band", "efficiency", "weights", "ivcheck", "simulate")
METHODS = ("local", "l2", "nd")
SCHEMES = ("none", "subgroup", "counterfactual", "iv", "complier")
TABLES = ("sa", "sweep", "kernel")
EXPERIMENTS = ("pointwise", "uniform", "efficiency", "boundary", "process")


@dataclass
class EstimatorParameters:
    """
    Class with parameters of the density estimator

    Parameters:
        method(str): local (local regression of the EDF), l2 (local L2
        projection) or nd (derivative moments)
        kernel(str): uniform, triangular or epanechnikov
        p(int): polynomial order of the point estimate
        q(int|None): polynomial order for robust bias-corrected
        standard errors; None uses p
        h(float|str): bandwidth in data units, or "rot"
        deriv(int): -1 for the distribution function, 0 for the density,
        l for the l-th derivative
        side(str|None): left or right for split bases
        split_from(int|None): lowest order split at the evaluation point
        redundant_j(int|None): index j of the redundant regressor
        alpha(float): level of pointwise intervals
        support(list[float]|None): data support, needed by l2 and nd
        design(str): design measure of the l2 method, lebesgue or empirical
        grid(list[float]|None): evaluation points
        grid_points(int): points of the default grid over the data range
    """
    method: str = "local"
    kernel: str = "triangular"
    p: int = 2
    q: int | None = None
    h: float | str = "rot"
    deriv: int = 0
    side: str | None = None
    split_from: int | None = None
    redundant_j: int | None = None
    alpha: float = 0.05
    support: list[float] | None = None
    design: str = "lebesgue"
    grid: list[float] | None = None
    grid_points: int = 50


@dataclass
class BandParameters:
    """
    Class with parameters of the uniform band

    Parameters:
        alpha(float): level
        draws(int): Gaussian draws
        jitter_start(float): first jitter of the correlation repair
        minimum_distance(bool): band for the minimum distance estimator
    """
    alpha: float = 0.05
    draws: int = 2000
    jitter_start: float = 1e-10
    minimum_distance: bool = False


@dataclass
class WeightParameters:
    """
    Class with parameters of the weighting schemes

    Parameters:
        scheme(str): none, subgroup, counterfactual, iv or complier
        which(int|str): subgroup 0 or 1, or complier target observed,
        y0 or y1
        covariate_order(int): highest covariate power in the propensity basis
    """
    scheme: str = "none"
    which: int | str = 1
    covariate_order: int = 1


@dataclass
class SimulationParameters:
    """
    Class with parameters of the Monte Carlo experiments

    Parameters:
        experiment(str): pointwise, uniform, efficiency, boundary or process
        dgp(dict): DgpSpec fields
        n(int): sample size
        reps(int): replications
        x(float): evaluation point
        grid(list[float]|None): band grid of the uniform experiment
        j_values(list[int]): redundant regressor indices of the
        efficiency experiment
    """
    experiment: str = "pointwise"
    dgp: dict = field(default_factory=lambda: {"kind": "gaussian"})
    n: int = 1000
    reps: int = 1000
    x: float = 0.0
    grid: list[float] | None = None
    j_values: list[int] = field(default_factory=lambda: [1, 2, 5, 10])


@dataclass
class EfficiencyParameters:
    """
    Class with parameters of the asymptotic variance tables

    Parameters:
        table(str): sa (variance comparison table), sweep (minimum
        distance constants across j) or kernel (equivalent kernels)
        p(int): polynomial order of sweep and kernel tables
        deriv(int): derivative order of sweep and kernel tables
        kernel(str): kernel of sweep and kernel tables
        j_values(list[int]): redundant regressor indices
        points(int): grid points of the kernel table
    """
    table: str = "sa"
    p: int = 1
    deriv: int = 0
    kernel: str = "uniform"
    j_values: list[int] = field(default_factory=lambda: list(range(1, 11)))
    points: int = 257


@dataclass
class RunConfig:
    """
    Class with all the required parameters for a run

    Parameters:
        command(str): subcommand
        input_path(str|None): CSV input
        columns(ColumnMap): column roles
        estimator(EstimatorParameters): estimator settings
        band(BandParameters): band settings
        weights(WeightParameters): weighting settings
        simulation(SimulationParameters): experiment settings
        efficiency(EfficiencyParameters): variance table settings
        store_path(str): output directory
        output_name(str|None): file stem, the subcommand by default
        seed(int): seed of every random draw
        threads(int): worker threads
        progress(bool): progress bars
        matrices(bool): fit writes the per-point Gram, sigma and omega
            matrices to the sidecar
    """
    command: str = "fit"
    input_path: str | None = None
    columns: ColumnMap = field(default_factory=ColumnMap)
    estimator: EstimatorParameters = field(default_factory=EstimatorParameters)
    band: BandParameters = field(default_factory=BandParameters)
    weights: WeightParameters = field(default_factory=WeightParameters)
    simulation: SimulationParameters = field(default_factory=SimulationParameters)
    efficiency: EfficiencyParameters = field(default_factory=EfficiencyParameters)
    store_path: str = "."
    output_name: str | None = None
    seed: int = 0
    threads: int = 1
    progress: bool = False
    matrices: bool = False


def _override(params, section_cfg: dict, section: str):
    """
    Alters a default parameter object with the keys the user
    provides, rejecting keys the object does not have
    """
    if not isinstance(section_cfg, dict):
        raise ValidationError(f"Configuration section {section} should be an object")
    known = {i.name for i in fields(params)}
    unknown = sorted(set(section_cfg) - known)
    if unknown:
        raise ValidationError(f"Unknown key(s) {', '.join(unknown)} in section {section}")
    for key, value in section_cfg.items():
        setattr(params, key, value)
    return params


def _choice(value, options: tuple, what: str):
    if value not in options:
        raise ValidationError(f"Unknown {what} {value!r}, use one of {', '.join(map(str, options))}")
    return value


def set_column_map(columns_cfg: dict) -> ColumnMap:
    """
    Creates a default ColumnMap and alters it with the roles the
    user provides

    Parameters:
        columns_cfg(dict): user-provided column roles
    Returns:
        columns(ColumnMap): full column map
    """
    columns = _override(ColumnMap(), columns_cfg, "columns")
    columns.z = list(columns.z)
    return columns


def set_estimator_parameters(estimator_cfg: dict) -> EstimatorParameters:
    """
    Creates a default EstimatorParameters object and alters it,
    if user provides any kind of specific information

    Parameters:
        estimator_cfg(dict): user-provided estimator settings
    Returns:
        estimator(EstimatorParameters): full set of estimator settings
    """
    estimator = _override(EstimatorParameters(), estimator_cfg, "estimator")
    _choice(estimator.method, METHODS, "method")
    _choice(estimator.design, ("lebesgue", "empirical"), "design")
    if isinstance(estimator.h, str):
        if estimator.h != "rot":
            raise ValidationError(f"Bandwidth should be a positive number or rot, got {estimator.h!r}")
    elif not estimator.h > 0:
        raise ValidationError(f"Bandwidth should be positive, got {estimator.h}")
    if estimator.q is not None and estimator.q <= estimator.p:
        raise ValidationError(f"Inference order q={estimator.q} should exceed p={estimator.p}")
    if estimator.support is not None:
        if len(estimator.support) != 2 or not estimator.support[0] < estimator.support[1]:
            raise ValidationError(f"Support should be an interval lo,hi, got {estimator.support}")
        estimator.support = [float(i) for i in estimator.support]
    if estimator.method in ("l2", "nd") and estimator.support is None and \
            not (estimator.method == "l2" and estimator.design == "empirical"):
        raise ValidationError(f"Method {estimator.method} needs the support lo,hi")
    if estimator.method == "nd" and estimator.deriv < 0:
        raise ValidationError("Method nd estimates the density and its derivatives only")
    if estimator.grid_points < 1:
        raise ValidationError("Grid should contain at least one point")
    return estimator


def set_band_parameters(band_cfg: dict) -> BandParameters:
    """
    Creates a default BandParameters object and alters it with
    the user-provided values
    """
    band = _override(BandParameters(), band_cfg, "band")
    BandConfig(alpha=band.alpha, draws=band.draws, jitter_start=band.jitter_start)
    return band


def set_weight_parameters(weights_cfg: dict) -> WeightParameters:
    """
    Creates a default WeightParameters object and alters it with
    the user-provided values
    """
    weights = _override(WeightParameters(), weights_cfg, "weights")
    _choice(weights.scheme, SCHEMES, "weighting scheme")
    if weights.scheme == "subgroup":
        _choice(weights.which, (0, 1), "subgroup")
    if weights.scheme == "complier":
        _choice(weights.which, ("observed", "y0", "y1"), "complier target")
    if weights.covariate_order < 1:
        raise ValidationError("Covariate order should be at least 1")
    return weights


def set_simulation_parameters(simulation_cfg: dict) -> SimulationParameters:
    """
    Creates a default SimulationParameters object and alters it
    with the user-provided values
    """
    simulation = _override(SimulationParameters(), simulation_cfg, "simulation")
    _choice(simulation.experiment, EXPERIMENTS, "experiment")
    unknown = sorted(set(simulation.dgp) - {i.name for i in fields(DgpSpec)})
    if unknown:
        raise ValidationError(f"Unknown key(s) {', '.join(unknown)} in section simulation.dgp")
    DgpSpec(**simulation.dgp)
    if simulation.n < 1 or simulation.reps < 1:
        raise ValidationError("Sample size and replications should be positive")
    return simulation


def set_efficiency_parameters(efficiency_cfg: dict) -> EfficiencyParameters:
    """
    Creates a default EfficiencyParameters object and alters it
    with the user-provided values
    """
    efficiency = _override(EfficiencyParameters(), efficiency_cfg, "efficiency")
    _choice(efficiency.table, TABLES, "table")
    KernelSpec(efficiency.kernel)
    return efficiency


def set_storage_directory(store_path: str) -> str:
    """
    Sets directory for results, in case of its absence, creates it

    Parameters:
        store_path(str): directory for the results
    Returns:
        store_path(str): existing directory
    """
    if not isdir(store_path):
        logging.info("Directory %s not exists, creating directory", store_path)
        mkdir(store_path)
    logging.info("Directory set to %s", store_path)
    return store_path


def set_configuration(cfg: dict) -> RunConfig:
    """
    Takes dict with configuration values and returns RunConfig with
    the user-defined or default parameters; every section is
    validated before anything is computed

    Parameters:
        cfg(dict): dictionary with the user-defined parameters
    Returns:
        run_cfg(RunConfig): resolved configuration
    """
    run_cfg = RunConfig()
    builders = {"columns": set_column_map, "estimator": set_estimator_parameters,
                "band": set_band_parameters, "weights": set_weight_parameters,
                "simulation": set_simulation_parameters, "efficiency": set_efficiency_parameters}
    known = {i.name for i in fields(RunConfig)}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise ValidationError(f"Unknown configuration key(s) {', '.join(unknown)}")
    for key, value in cfg.items():
        setattr(run_cfg, key, builders[key](value) if key in builders else value)
    _choice(run_cfg.command, COMMANDS, "subcommand")
    if not isinstance(run_cfg.seed, int) or run_cfg.seed < 0:
        raise ValidationError(f"Seed should be a nonnegative integer, got {run_cfg.seed}")
    if run_cfg.threads < 1:
        raise ValidationError("Thread count should be at least 1")
    return run_cfg


def load_configuration(config_path: str | None = None) -> dict:
    """
    Default configuration merged section by section with the
    user JSON file, if any
    """
    merged = json.loads(json.dumps(config))
    if config_path is None:
        return merged
    try:
        with open(config_path, "r", encoding="utf-8") as inp:
            user = json.load(inp)
    except (OSError, json.JSONDecodeError) as err:
        raise ValidationError(f"Cannot read configuration {config_path}: {err}") from err
    if not isinstance(user, dict):
        raise ValidationError("Configuration file should hold a JSON object")
    for key, value in user.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key].update(value)
        else:
            merged[key] = value
    return merged


def build_fit_config(estimator: EstimatorParameters, sample: SortedSample | None = None,
                     h: float | None = None) -> FitConfig:
    """
    FitConfig of the estimator settings; a rot bandwidth is computed
    from the sample unless h is given
    """
    kernel = KernelSpec(estimator.kernel)
    redundant = None if estimator.redundant_j is None else \
        RedundantSpec.for_derivative(estimator.redundant_j, estimator.deriv)
    basis = BasisSpec(estimator.p, redundant, estimator.split_from)
    inference = None if estimator.q is None else BasisSpec(estimator.q, redundant, estimator.split_from)
    if h is None:
        if estimator.h == "rot":
            if sample is None:
                raise ValidationError("Rule-of-thumb bandwidth needs a sample")
            h = rot_bandwidth(sample, estimator.p, max(estimator.deriv, 0), kernel).h
        else:
            h = float(estimator.h)
    return FitConfig(kernel, basis, h, estimator.deriv, estimator.side, inference)


def evaluation_grid(estimator: EstimatorParameters, sample: SortedSample) -> np.ndarray:
    """
    Configured grid, or an equally spaced one over the data range
    """
    if estimator.grid is not None:
        return np.asarray(estimator.grid, dtype=float)
    return make_grid(sample.values[0], sample.values[-1], estimator.grid_points)


def panel_weights(panel: PanelData, weights: WeightParameters) -> np.ndarray:
    """
    Weights of the configured scheme for a single reweighted
    distribution
    """
    design = expand_covariates(panel.z[:, 1:], weights.covariate_order)
    if weights.scheme == "subgroup":
        return weights_subgroup(panel.t, weights.which)
    if weights.scheme == "counterfactual":
        return weights_counterfactual(panel.t, design)
    if weights.scheme == "complier":
        if panel.d is None:
            raise ValidationError("Complier weights need an instrument column")
        return weights_complier(panel.t, panel.d, design, weights.which)
    raise ValidationError(f"Scheme {weights.scheme} does not give a single weight vector")


def load_sample(run_cfg: RunConfig) -> SortedSample:
    """
    Sorted sample of the input file, reweighted when a group column
    and a weighting scheme are configured
    """
    if run_cfg.input_path is None:
        raise ValidationError(f"Subcommand {run_cfg.command} needs an input file")
    data = ingest_csv(run_cfg.input_path, run_cfg.columns)
    if isinstance(data, SortedSample):
        if run_cfg.weights.scheme != "none":
            raise ValidationError("Weighting scheme needs a group column")
        return data
    if run_cfg.weights.scheme == "none":
        return sort_sample(data.x)
    return sort_sample(data.x, panel_weights(data, run_cfg.weights))


def _l2_point(sample: SortedSample, edf: EdfValues, fit_cfg: FitConfig, estimator: EstimatorParameters,
              x: float) -> tuple[list, PointFit | None, str | None]:
    try:
        if estimator.method == "nd":
            value = nd_estimate(sample, fit_cfg, tuple(estimator.support), x)[fit_cfg.deriv]
            return [x, np.nan, value, np.nan, np.nan, np.nan], None, None
        design = DesignSpec(estimator.design, None if estimator.support is None else tuple(estimator.support))
        fit = l2_fit_point(sample, edf, fit_cfg, design, x)
        interval_of = ci_pointwise if fit_cfg.basis.redundant is None else md_interval
        interval = interval_of(fit, fit_cfg.deriv, estimator.alpha, fit_cfg.side)
    except NumericalFailure as err:
        return [x, np.nan, np.nan, np.nan, np.nan, np.nan], None, f"{type(err).__name__}: {err}"
    return [x, fit.n_local, interval.estimate, interval.se, interval.lower, interval.upper], fit, None


def _point_rows(sample: SortedSample, fit_cfg: FitConfig, estimator: EstimatorParameters,
                grid: np.ndarray, workers: int = 1
                ) -> tuple[DataFrame, dict, list[PointFit | None]]:
    edf = edf_at_points(sample)
    if estimator.method == "local":
        gridfit = fit_grid(sample, edf, fit_cfg, grid, workers)
        if fit_cfg.basis.redundant is None:
            table = gridfit.to_frame(estimator.alpha)
        else:
            table = md_frame(gridfit, estimator.alpha)
        return table, {str(grid[k]): v for k, v in gridfit.failures.items()}, gridfit.fits
    results = parallel_map(lambda x: _l2_point(sample, edf, fit_cfg, estimator, x), grid, workers)
    failures = {}
    for x, (_, _, reason) in zip(grid, results):
        if reason is not None:
            logging.warning("Grid point %s flagged: %s", x, reason)
            failures[str(x)] = reason
    if len(failures) == grid.size:
        raise NumericalFailure(f"All {grid.size} grid points failed")
    table = DataFrame([i[0] for i in results], columns=["x", "n_local", "est", "se", "ci_lo", "ci_hi"])
    return table, failures, [i[1] for i in results]


def point_matrices(grid: np.ndarray, fits: list[PointFit | None]) -> dict:
    """
    Gram, sigma and omega matrices of every fitted grid point,
    normalised coordinates
    """
    return {str(x): {"gamma": fit.gamma, "sigma": fit.sigma, "omega": fit.omega}
            for x, fit in zip(grid, fits) if fit is not None}


def run_fit(run_cfg: RunConfig) -> tuple[DataFrame, dict]:
    """
    Pointwise estimates with intervals over the grid; with a
    redundant regressor the minimum distance estimates are reported
    """
    if run_cfg.matrices and run_cfg.estimator.method == "nd":
        raise ValidationError("Method nd has no Gram or variance matrices to report")
    sample = load_sample(run_cfg)
    fit_cfg = build_fit_config(run_cfg.estimator, sample)
    grid = evaluation_grid(run_cfg.estimator, sample)
    table, failures, fits = _point_rows(sample, fit_cfg, run_cfg.estimator, grid, run_cfg.threads)
    table.insert(1, "h", fit_cfg.h)
    diagnostics = {"h": fit_cfg.h, "n": sample.n, "failures": failures}
    if run_cfg.matrices:
        diagnostics["matrices"] = point_matrices(grid, fits)
    return table, diagnostics


def _band_config(run_cfg: RunConfig, grid: np.ndarray) -> BandConfig:
    band = run_cfg.band
    return BandConfig(grid, band.alpha, band.draws, run_cfg.seed, run_cfg.estimator.deriv,
                      band.jitter_start, band.minimum_distance)


def run_band(run_cfg: RunConfig) -> tuple[DataFrame, dict]:
    """
    Uniform band over the grid next to pointwise intervals
    """
    if run_cfg.estimator.method != "local":
        raise ValidationError("Bands are available for the local regression method")
    sample = load_sample(run_cfg)
    fit_cfg = build_fit_config(run_cfg.estimator, sample)
    grid = evaluation_grid(run_cfg.estimator, sample)
    gridfit = fit_grid(sample, edf_at_points(sample), fit_cfg, grid, run_cfg.threads)
    band = confidence_band(gridfit, _band_config(run_cfg, grid), run_cfg.threads)
    table = band.to_frame()
    pointwise = gridfit.to_frame(run_cfg.band.alpha)
    table["ci_lo"], table["ci_hi"] = pointwise["ci_lo"].to_numpy(), pointwise["ci_hi"].to_numpy()
    diagnostics = {"h": fit_cfg.h, "quantile": band.quantile,
                   "simulated_quantile": band.simulated_quantile, **band.diagnostics}
    return table, diagnostics


def run_efficiency_table(run_cfg: RunConfig) -> tuple[DataFrame, dict]:
    """
    Asymptotic variance constants by quadrature
    """
    efficiency = run_cfg.efficiency
    kernel = KernelSpec(efficiency.kernel)
    if efficiency.table == "sa":
        return variance_table(progress=run_cfg.progress), {}
    if efficiency.table == "sweep":
        return md_variance_sweep(efficiency.p, efficiency.deriv, kernel, efficiency.j_values), {}
    return equivalent_kernel_table(efficiency.p, efficiency.deriv, kernel,
                                   efficiency.j_values, efficiency.points), {}


def _panel(run_cfg: RunConfig) -> PanelData:
    if run_cfg.input_path is None:
        raise ValidationError(f"Subcommand {run_cfg.command} needs an input file")
    data = ingest_csv(run_cfg.input_path, run_cfg.columns)
    if not isinstance(data, PanelData):
        raise ValidationError(f"Subcommand {run_cfg.command} needs a treatment column")
    return data


def run_weights(run_cfg: RunConfig) -> tuple[DataFrame, dict]:
    """
    Weight column(s) of the configured scheme, aligned with the input rows
    """
    panel = _panel(run_cfg)
    table = DataFrame({"x": panel.x, "t": panel.t})
    if panel.d is not None:
        table["d"] = panel.d
    scheme = run_cfg.weights.scheme
    if scheme == "none":
        raise ValidationError("Choose a weighting scheme for the weights subcommand")
    if scheme == "iv":
        if panel.d is None:
            raise ValidationError("IV cell weights need an instrument column")
        w00, w10, scale00, scale10 = weights_iv_validity(panel.t, panel.d)
        table["w_00"], table["w_10"] = w00, w10
        return table, {"scale_00": scale00, "scale_10": scale10}
    table["weight"] = panel_weights(panel, run_cfg.weights)
    return table, {"mean_weight": float(table["weight"].mean())}


def run_ivcheck(run_cfg: RunConfig) -> tuple[DataFrame, dict]:
    """
    Scaled untreated densities in both instrument arms with bands
    """
    panel = _panel(run_cfg)
    outcome = sort_sample(panel.x)
    fit_cfg = build_fit_config(run_cfg.estimator, outcome)
    grid = evaluation_grid(run_cfg.estimator, outcome)
    diagnostic = iv_band_diagnostic(panel, fit_cfg, _band_config(run_cfg, grid), grid, run_cfg.threads)
    return diagnostic.frame, {"h": fit_cfg.h, "violated": diagnostic.violated,
                              "violations": diagnostic.violations, "scale_00": diagnostic.scale_00,
                              "scale_10": diagnostic.scale_10}


def run_simulation(run_cfg: RunConfig) -> tuple[DataFrame, dict]:
    """
    Configured Monte Carlo experiment
    """
    simulation, estimator = run_cfg.simulation, run_cfg.estimator
    dgp = DgpSpec(**simulation.dgp)
    rot = estimator.h == "rot"
    fit_cfg = build_fit_config(estimator, h=1.0 if rot else None)
    common = {"workers": run_cfg.threads, "progress": run_cfg.progress}
    if simulation.experiment == "pointwise":
        result = run_pointwise_coverage(dgp, simulation.n, simulation.reps, fit_cfg, simulation.x,
                                        estimator.alpha, run_cfg.seed, rot, **common)
    elif simulation.experiment == "uniform":
        if simulation.grid is None:
            raise ValidationError("Uniform experiment needs simulation.grid")
        band_cfg = _band_config(run_cfg, np.asarray(simulation.grid, dtype=float))
        result = run_uniform_coverage(dgp, simulation.n, simulation.reps, fit_cfg, band_cfg,
                                      run_cfg.seed, rot, **common)
    else:
        if rot:
            raise ValidationError(f"Experiment {simulation.experiment} needs a numeric bandwidth")
        if simulation.experiment == "efficiency":
            table = run_efficiency(dgp, simulation.n, simulation.reps, estimator.p, estimator.deriv,
                                   simulation.j_values, simulation.x, run_cfg.seed, fit_cfg.h,
                                   KernelSpec(estimator.kernel), **common)
        elif simulation.experiment == "boundary":
            table = run_boundary_experiment(dgp, simulation.n, simulation.reps, fit_cfg, simulation.x,
                                            run_cfg.seed, **common)
        else:
            table = run_process_check(dgp, simulation.n, simulation.reps, fit_cfg, simulation.x,
                                      run_cfg.seed, **common)
        return table, {}
    summary = {i: getattr(result, i) for i in ("coverage", "bias", "sd", "mean_se", "reps", "seed", "failures")}
    logging.info("Coverage %.3f, bias %.4g, sd %.4g, mean se %.4g",
                 result.coverage, result.bias, result.sd, result.mean_se)
    return result.details, summary


RUNNERS = {"fit": run_fit, "band": run_band, "efficiency": run_efficiency_table,
           "weights": run_weights, "ivcheck": run_ivcheck, "simulate": run_simulation}


def run(run_cfg: RunConfig) -> str:
    """
    Takes a resolved configuration, runs its subcommand and saves
    the result table with the JSON sidecar

    Parameters:
        run_cfg(RunConfig): resolved configuration
    Returns:
        csv_path(str): path of the result table
    """
    logging.info("Running %s", run_cfg.command)
    table, diagnostics = RUNNERS[run_cfg.command](run_cfg)
    store_path = set_storage_directory(run_cfg.store_path)
    return save_table(table, store_path, run_cfg.output_name or run_cfg.command, run_cfg.command,
                      asdict(run_cfg), run_cfg.seed, diagnostics)
