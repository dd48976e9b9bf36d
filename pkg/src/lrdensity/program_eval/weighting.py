"""
Weighting module turns group, treatment and instrument indicators
into the weights of reweighted distribution functions: subgroup
and counterfactual weights for two-group comparisons, IV cell
weights for the testable implication of instrument validity,
complier weights, and the band-based IV validity diagnostic.
"""

from dataclasses import dataclass, field
import logging
import numpy as np
from pandas import DataFrame
from lrdensity.errors import NonPositiveShare, ValidationError
from lrdensity.estimation.edf import edf_at_points, sort_sample
from lrdensity.estimation.fit_local import FitConfig, fit_grid
from lrdensity.inference.uniform_band import BandConfig, confidence_band
from lrdensity.lrdutils import as_finite_array
from lrdensity.program_eval.logit import clamp_propensity, fit_logit, predict_proba

COMPLIER_TARGETS = ("observed", "y0", "y1")


def _binary(values, name: str) -> np.ndarray:
    array = as_finite_array(values, name)
    if not np.all(np.isin(array, (0.0, 1.0))):
        bad = array[~np.isin(array, (0.0, 1.0))][0]
        raise ValidationError(f"{name} should be binary, found value {bad}")
    return array


@dataclass
class PanelData:
    """
    Outcome with group and instrument indicators and covariates

    Parameters:
        x(np.ndarray): outcome
        t(np.ndarray): binary group or treatment indicator
        d(np.ndarray|None): binary instrument
        z(np.ndarray|None): covariate design with intercept column;
        None stands for the intercept only
    """
    x: np.ndarray
    t: np.ndarray
    d: np.ndarray | None = None
    z: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.x = as_finite_array(self.x, "outcome")
        self.t = _binary(self.t, "treatment")
        if self.t.size != self.x.size:
            raise ValidationError(f"Treatment has {self.t.size} rows, outcome has {self.x.size}")
        if self.d is not None:
            self.d = _binary(self.d, "instrument")
            if self.d.size != self.x.size:
                raise ValidationError(f"Instrument has {self.d.size} rows, outcome has {self.x.size}")
        if self.z is None:
            self.z = np.ones((self.x.size, 1))
        self.z = np.asarray(self.z, dtype=float)
        if self.z.ndim != 2 or self.z.shape[0] != self.x.size or not np.all(np.isfinite(self.z)):
            raise ValidationError("Covariates should be a finite matrix with one row per observation")

    @property
    def n(self) -> int:
        """
        Number of rows
        """
        return int(self.x.size)


def weights_subgroup(t, which: int) -> np.ndarray:
    """
    w_i = 1(t_i = which) / share of the subgroup; mean one

    Arguments:
        t(array-like): binary indicator
        which(int): 0 or 1
    Returns:
        weights(np.ndarray): subgroup weights
    """
    t = _binary(t, "group indicator")
    if which not in (0, 1):
        raise ValidationError(f"Subgroup should be 0 or 1, got {which}")
    member = (t == which).astype(float)
    share = member.mean()
    if share == 0:
        raise ValidationError(f"Subgroup {which} is empty")
    return member / share


def weights_counterfactual(t, z=None, propensity=None) -> np.ndarray:
    """
    Counterfactual weights for group 1 reweighted to the covariate
    distribution of group 0:
    t_i P[t=0|z_i]/P[t=1|z_i] P[t=1]/P[t=0], normalised to mean one

    Arguments:
        t(array-like): binary group indicator
        z(array-like|None): covariate design with intercept
        propensity(array-like|None): known P[t=1|z]; fitted by logit if absent
    Returns:
        weights(np.ndarray): weights, zero for group 0
    """
    t = _binary(t, "group indicator")
    share = t.mean()
    if share in (0.0, 1.0):
        raise ValidationError("Counterfactual weights need both groups")
    if propensity is None:
        design = np.ones((t.size, 1)) if z is None else np.asarray(z, dtype=float)
        propensity = predict_proba(fit_logit(design, t), design)
    else:
        propensity = clamp_propensity(as_finite_array(propensity, "propensity"))
    raw = t * (1 - propensity) / propensity * share / (1 - share)
    return raw / raw.mean()


def weights_iv_validity(t, d) -> tuple[np.ndarray, np.ndarray, float, float]:
    """
    Cell weights for the untreated in each instrument arm and the
    shares that scale the two densities of the testable implication
    P[t=0|d=0] f_(d=0,t=0) >= P[t=0|d=1] f_(d=1,t=0)

    Arguments:
        t(array-like): binary treatment
        d(array-like): binary instrument
    Returns:
        w_00, w_10, scale_00, scale_10(tuple): weights of cells
        (d=0, t=0) and (d=1, t=0), then P[t=0|d=0] and P[t=0|d=1]
    """
    t = _binary(t, "treatment")
    d = _binary(d, "instrument")
    if t.size != d.size:
        raise ValidationError("Treatment and instrument have different lengths")
    cells = []
    for arm in (0.0, 1.0):
        member = ((d == arm) & (t == 0)).astype(float)
        if member.sum() == 0:
            raise ValidationError(f"Cell d={int(arm)}, t=0 is empty")
        cells.append(member / member.mean())
    scales = [float(np.mean(t[d == arm] == 0)) for arm in (0.0, 1.0)]
    return cells[0], cells[1], scales[0], scales[1]


def complier_share(t, d, instrument_propensity) -> float:
    """
    Plug-in first stage mean(t d / P1 - t (1 - d) / P0)
    """
    p1 = instrument_propensity
    return float(np.mean(t * d / p1 - t * (1 - d) / (1 - p1)))


def weights_complier(t, d, z=None, which: str = "observed", propensity=None) -> np.ndarray:
    """
    Complier weights with P0 = P[d=0|z], P1 = P[d=1|z] and the share
    Pc of compliers:
    observed: (1 - t(1-d)/P0 - (1-t)d/P1) / Pc,
    y0: (1-t)((1-d) - P0)/(P0 P1) / Pc,
    y1: t(d - P1)/(P0 P1) / Pc

    Arguments:
        t(array-like): binary treatment
        d(array-like): binary instrument
        z(array-like|None): covariate design with intercept
        which(str): observed, y0 or y1
        propensity(array-like|None): known P[d=1|z]; fitted by logit if absent
    Returns:
        weights(np.ndarray): complier weights
    """
    if which not in COMPLIER_TARGETS:
        raise ValidationError(f"Unknown complier target {which}, use one of {', '.join(COMPLIER_TARGETS)}")
    t = _binary(t, "treatment")
    d = _binary(d, "instrument")
    if t.size != d.size:
        raise ValidationError("Treatment and instrument have different lengths")
    if propensity is None:
        design = np.ones((t.size, 1)) if z is None else np.asarray(z, dtype=float)
        p1 = predict_proba(fit_logit(design, d), design)
    else:
        p1 = clamp_propensity(as_finite_array(propensity, "propensity"))
    p0 = 1 - p1
    share = complier_share(t, d, p1)
    if not share > 0:
        raise NonPositiveShare(f"Estimated complier share is {share:.4g}")
    logging.info("Estimated complier share %.4f", share)
    if which == "observed":
        kappa = 1 - t * (1 - d) / p0 - (1 - t) * d / p1
    elif which == "y0":
        kappa = (1 - t) * ((1 - d) - p0) / (p0 * p1)
    else:
        kappa = t * (d - p1) / (p0 * p1)
    return kappa / share


@dataclass
class IvDiagnostic:
    """
    Scaled untreated densities in the two instrument arms with bands

    Parameters:
        frame(DataFrame): x, curve_00, band_lo_00, band_hi_00,
        curve_10, band_lo_10, band_hi_10
        violated(bool): at some point the band of the d=1 curve lies
        entirely above the band of the d=0 curve
        violations(np.ndarray): grid points where that happens
        scale_00(float): P[t=0|d=0]
        scale_10(float): P[t=0|d=1]
    """
    frame: DataFrame
    violated: bool
    violations: np.ndarray
    scale_00: float
    scale_10: float


def iv_band_diagnostic(panel: PanelData, cfg: FitConfig, band_cfg: BandConfig, grid,
                       workers: int = 1) -> IvDiagnostic:
    """
    Estimates P[t=0|d=0] f_(d=0,t=0) and P[t=0|d=1] f_(d=1,t=0) with
    uniform bands and flags where the bands separate in the
    direction ruled out by a valid instrument

    Arguments:
        panel(PanelData): data with instrument
        cfg(FitConfig): density settings
        band_cfg(BandConfig): band settings
        grid(array-like): evaluation points
        workers(int): threads
    Returns:
        diagnostic(IvDiagnostic): curves, bands and verdict
    """
    if panel.d is None:
        raise ValidationError("IV diagnostic needs an instrument column")
    w00, w10, scale00, scale10 = weights_iv_validity(panel.t, panel.d)
    frame = DataFrame({"x": np.asarray(grid, dtype=float)})
    bounds = {}
    for label, weights, scale in (("00", w00, scale00), ("10", w10, scale10)):
        sample = sort_sample(panel.x, weights)
        band = confidence_band(fit_grid(sample, edf_at_points(sample), cfg, grid, workers), band_cfg, workers)
        frame[f"curve_{label}"] = scale * band.estimate
        frame[f"band_lo_{label}"] = scale * band.lower
        frame[f"band_hi_{label}"] = scale * band.upper
        bounds[label] = (scale * band.lower, scale * band.upper)
    separated = bounds["10"][0] > bounds["00"][1]
    violations = frame["x"].to_numpy()[separated]
    if violations.size:
        logging.warning("IV validity bands separate at %s grid points", violations.size)
    return IvDiagnostic(frame, bool(violations.size), violations, scale00, scale10)
