"""
Edf module contains the sorted sample every estimator works on
and the (weighted) empirical distribution function.
"""

from dataclasses import dataclass, field
import numpy as np
from lrdensity.errors import ValidationError
from lrdensity.lrdutils import as_finite_array


@dataclass(frozen=True)
class SortedSample:
    """
    Sample sorted in ascending order with optional weights

    Parameters:
        values(np.ndarray): ascending data
        sort_index(np.ndarray): values = original[sort_index]
        weights(np.ndarray): weights aligned with values, ones by default
        weighted(bool): whether weights were supplied
    """
    values: np.ndarray
    sort_index: np.ndarray
    weights: np.ndarray
    weighted: bool = False
    cumulative_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "cumulative_weights", np.cumsum(self.weights))

    @property
    def n(self) -> int:
        """
        Sample size
        """
        return int(self.values.size)

    @property
    def weight_mean(self) -> float:
        """
        Mean of the weights
        """
        return float(np.mean(self.weights))


@dataclass(frozen=True)
class EdfValues:
    """
    EDF at every observation, aligned with the sorted order
    """
    values: np.ndarray


def sort_sample(x, w=None) -> SortedSample:
    """
    Stable sort of the data, carrying weights along

    Arguments:
        x(array-like): data
        w(array-like|None): weights, same length as x
    Returns:
        sample(SortedSample): sorted sample
    """
    data = as_finite_array(x, "x")
    if w is None:
        weights = np.ones_like(data)
    else:
        weights = as_finite_array(w, "weights")
        if weights.size != data.size:
            raise ValidationError(
                f"Weights have length {weights.size}, data have length {data.size}")
    order = np.argsort(data, kind="stable")
    return SortedSample(data[order], order, weights[order], w is not None)


def edf_at_points(s: SortedSample) -> EdfValues:
    """
    F_i = (1/n) sum_j w_j 1(x_j <= x_i), ties counted inclusively

    Arguments:
        s(SortedSample): sample
    Returns:
        edf(EdfValues): EDF at every sorted observation
    """
    last_equal = np.searchsorted(s.values, s.values, side="right")
    if s.weighted:
        return EdfValues(s.cumulative_weights[last_equal - 1] / s.n)
    return EdfValues(last_equal / s.n)


def edf_eval(s: SortedSample, t):
    """
    Right-continuous EDF at arbitrary points by binary search

    Arguments:
        s(SortedSample): sample
        t(float|np.ndarray): evaluation points
    Returns:
        edf(float|np.ndarray): EDF values, same shape as t
    """
    points = np.asarray(t, dtype=float)
    counts = np.searchsorted(s.values, points, side="right")
    if s.weighted:
        padded = np.concatenate([[0.0], s.cumulative_weights])
        values = padded[counts] / s.n
    else:
        values = counts / s.n
    return float(values) if values.ndim == 0 else values
