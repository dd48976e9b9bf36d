"""
Logit module fits the propensity models behind the estimated
weights: maximum likelihood logit by iteratively reweighted
least squares with step halving, fitted probabilities with
overlap clamping, and the polynomial covariate basis b(z).
"""

from dataclasses import dataclass
import logging
import numpy as np
from scipy.special import expit, log_expit
from lrdensity.errors import ValidationError

MAX_ITERATIONS = 100
SEPARATION_LIMIT = 1e-10
CLAMP = (1e-3, 1 - 1e-3)


@dataclass
class LogitModel:
    """
    Fitted logit

    Parameters:
        beta(np.ndarray): coefficients
        converged(bool): gradient criterion met
        iterations(int): Newton steps taken
        loglik(float): log-likelihood at beta
        separated(bool): fitted probabilities left
        [1e-10, 1 - 1e-10] before convergence
    """
    beta: np.ndarray
    converged: bool
    iterations: int
    loglik: float
    separated: bool = False


def _design(z) -> np.ndarray:
    design = np.asarray(z, dtype=float)
    if design.ndim == 1:
        design = design[:, None]
    if design.ndim != 2 or not np.all(np.isfinite(design)):
        raise ValidationError("Covariate matrix should be a finite two-dimensional array")
    return design


def _binary(values, name: str) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    if array.ndim != 1 or not np.all(np.isin(array, (0.0, 1.0))):
        raise ValidationError(f"{name} should be a binary vector of zeros and ones")
    return array


def _loglik(design: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    eta = design @ beta
    return float(np.sum(y * log_expit(eta) + (1 - y) * log_expit(-eta)))


def fit_logit(z, y) -> LogitModel:
    """
    Maximum likelihood logit of y on z by Newton-Raphson (IRLS),
    halving the step while the likelihood decreases; converged
    once the score norm falls below 1e-8 n

    Arguments:
        z(array-like): n x k design, intercept included by the caller
        y(array-like): binary outcome
    Returns:
        model(LogitModel): fitted model
    """
    design = _design(z)
    y = _binary(y, "Logit outcome")
    n, k = design.shape
    if y.size != n:
        raise ValidationError(f"Outcome has length {y.size}, design has {n} rows")
    if y.min() == y.max():
        raise ValidationError("Logit outcome takes a single value")
    if np.linalg.matrix_rank(design) < k:
        raise ValidationError("Logit design is not of full column rank")
    beta = np.zeros(k)
    loglik = _loglik(design, y, beta)
    converged, separated = False, False
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        probabilities = expit(design @ beta)
        score = design.T @ (y - probabilities)
        if np.linalg.norm(score) < 1e-8 * n:
            converged = True
            iterations -= 1
            break
        if np.any((probabilities < SEPARATION_LIMIT) | (probabilities > 1 - SEPARATION_LIMIT)):
            separated = True
            break
        hessian = (design * (probabilities * (1 - probabilities))[:, None]).T @ design
        step = np.linalg.lstsq(hessian, score, rcond=None)[0]
        length = 1.0
        while True:
            candidate = beta + length * step
            candidate_loglik = _loglik(design, y, candidate)
            if candidate_loglik >= loglik - 1e-12 * abs(loglik) or length < 1e-10:
                break
            length /= 2
        beta, loglik = candidate, candidate_loglik
    else:
        probabilities = expit(design @ beta)
        converged = bool(np.linalg.norm(design.T @ (y - probabilities)) < 1e-8 * n)
    if separated:
        logging.warning("Logit fit separated after %s iterations, probabilities will be clamped", iterations)
    elif not converged:
        logging.warning("Logit fit did not converge in %s iterations", MAX_ITERATIONS)
    else:
        logging.info("Logit fit converged in %s iterations", iterations)
    return LogitModel(beta, converged, iterations, loglik, separated)


def predict_proba(model: LogitModel, z, clamp: tuple[float, float] | None = CLAMP) -> np.ndarray:
    """
    Fitted probabilities, clamped to the overlap interval

    Arguments:
        model(LogitModel): fitted model
        z(array-like): design
        clamp(tuple[float, float]|None): bounds, None keeps raw values
    Returns:
        probabilities(np.ndarray): P[y = 1 | z]
    """
    probabilities = expit(_design(z) @ model.beta)
    return probabilities if clamp is None else clamp_propensity(probabilities, clamp)


def clamp_propensity(probabilities: np.ndarray, clamp: tuple[float, float] = CLAMP) -> np.ndarray:
    """
    Clips probabilities to [clamp[0], clamp[1]], logging how many moved
    """
    lower, upper = clamp
    moved = int(np.sum((probabilities < lower) | (probabilities > upper)))
    if moved:
        logging.warning("%s propensities clamped to [%s, %s]", moved, lower, upper)
    return np.clip(probabilities, lower, upper)


def expand_covariates(z, order: int = 1) -> np.ndarray:
    """
    Basis b(z): intercept followed by powers 1..order of every
    covariate, no cross terms

    Arguments:
        z(array-like): n x k raw covariates, k may be zero
        order(int): highest power
    Returns:
        design(np.ndarray): n x (1 + k order) design
    """
    if order < 1:
        raise ValidationError(f"Covariate expansion order should be at least 1, got {order}")
    covariates = _design(z)
    columns = [np.ones(covariates.shape[0])]
    for power in range(1, order + 1):
        columns.extend(covariates[:, j] ** power for j in range(covariates.shape[1]))
    return np.column_stack(columns)
