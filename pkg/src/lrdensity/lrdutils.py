"""
Lrdutils module contains functions that are used across
the whole package and should be accessible from
each part of the code; collected here to avoid
duplicating.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar
import numpy as np
from numpy import percentile
from tqdm import tqdm
from lrdensity.errors import ValidationError

T = TypeVar("T")
R = TypeVar("R")

CONDITION_LIMIT = 1e12


def as_finite_array(values, name: str) -> np.ndarray:
    """
    Converts values into a one-dimensional float array and
    checks that every entry is finite

    Arguments:
        values(array-like): raw values
        name(str): name of the values for error messages
    Returns:
        array(np.ndarray): one-dimensional float array
    """
    array = np.asarray(values, dtype=float)
    if array.ndim != 1:
        array = array.reshape(-1)
    if array.size == 0:
        raise ValidationError(f"{name} is empty")
    if not np.all(np.isfinite(array)):
        raise ValidationError(f"{name} contains NaN or infinite values")
    return array


def check_alpha(alpha: float, allow_one: bool = True) -> float:
    """
    Checks that a significance level lies in (0, 1], or (0, 1)
    if allow_one is off
    """
    upper_ok = alpha <= 1 if allow_one else alpha < 1
    if not (alpha > 0 and upper_ok):
        raise ValidationError(f"Incorrect alpha {alpha}, should be between 0 and 1")
    return float(alpha)


def robust_scale(values: np.ndarray) -> float:
    """
    Returns min(standard deviation, IQR/1.349), ignoring a zero
    component; 0 means the sample has no dispersion at all

    Arguments:
        values(np.ndarray): sample
    Returns:
        scale(float): robust dispersion estimate
    """
    sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    q1, q3 = percentile(values, [25, 75])
    iqr_scale = float(q3 - q1) / 1.349
    positive = [i for i in (sd, iqr_scale) if i > 0]
    return min(positive) if positive else 0.0


def make_grid(lower: float, upper: float, count: int) -> np.ndarray:
    """
    Equally spaced evaluation grid including both ends

    Arguments:
        lower(float): left end
        upper(float): right end
        count(int): number of points
    Returns:
        grid(np.ndarray): sorted grid
    """
    if count < 1:
        raise ValidationError("Grid should contain at least one point")
    if count == 1:
        return np.array([float(lower)])
    if upper <= lower:
        raise ValidationError(f"Grid end {upper} should exceed grid start {lower}")
    return np.linspace(lower, upper, count)


def check_grid(grid) -> np.ndarray:
    """
    Validates an evaluation grid: finite and sorted ascending
    """
    values = as_finite_array(grid, "grid")
    if np.any(np.diff(values) < 0):
        raise ValidationError("Grid should be sorted in ascending order")
    return values


def symmetric_inverse(matrix: np.ndarray,
                      error: type[Exception],
                      what: str,
                      limit: float = CONDITION_LIMIT) -> np.ndarray:
    """
    Inverts a symmetric positive semidefinite matrix through its
    eigendecomposition, raising the given error if the condition
    number exceeds the limit

    Arguments:
        matrix(np.ndarray): symmetric matrix
        error(type[Exception]): exception class to raise
        what(str): name of the matrix for the message
        limit(float): largest admissible condition number
    Returns:
        inverse(np.ndarray): symmetric inverse
    """
    sym = (matrix + matrix.T) / 2
    eigenvalues, eigenvectors = np.linalg.eigh(sym)
    largest = eigenvalues[-1]
    smallest = eigenvalues[0]
    if largest <= 0 or smallest <= 0 or largest / smallest > limit:
        condition = np.inf if smallest <= 0 or largest <= 0 else largest / smallest
        raise error(f"{what} is singular (condition number {condition:.3g})")
    inverse = (eigenvectors / eigenvalues) @ eigenvectors.T
    return (inverse + inverse.T) / 2


def parallel_map(func: Callable[[T], R], items: Iterable[T], workers: int = 1,
                 progress: bool = False, desc: str | None = None) -> list[R]:
    """
    Applies a function to every item, optionally in a thread pool;
    output order follows input order in both cases

    Arguments:
        func(Callable): function of one argument
        items(Iterable): arguments
        workers(int): number of threads, 1 runs sequentially
        progress(bool): show a tqdm progress bar
        desc(str|None): progress bar label
    Returns:
        results(list): results in input order
    """
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [func(i) for i in tqdm(items, disable=not progress, desc=desc)]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(tqdm(executor.map(func, items), total=len(items), disable=not progress, desc=desc))
