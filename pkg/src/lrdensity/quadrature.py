"""
Quadrature module provides Gauss-Legendre rules used by
the asymptotic constants, the local L2 estimator and the
simulation truth computations.

All integrands are vectorised: they take a one-dimensional
array of nodes and return an array whose first axis runs
over the nodes (further axes hold vector or matrix values).
"""

from functools import lru_cache
import logging
from typing import Callable, Sequence
import numpy as np
from lrdensity.errors import QuadratureError

Integrand = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=16)
def legendre_rule(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre nodes and weights on [-1, 1]
    """
    points, weights = np.polynomial.legendre.leggauss(nodes)
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


def split_points(lower: float, upper: float, breakpoints: Sequence[float] = ()) -> np.ndarray:
    """
    Sorted panel ends for [lower, upper], with the breakpoints
    that fall strictly inside added

    Arguments:
        lower(float): left end
        upper(float): right end
        breakpoints(Sequence[float]): kinks or jumps of the integrand
    Returns:
        ends(np.ndarray): panel ends
    """
    inner = [b for b in breakpoints if lower < b < upper]
    return np.unique(np.array([lower, *inner, upper], dtype=float))


def fixed_gauss(func: Integrand, lower: float, upper: float, nodes: int = 64) -> np.ndarray:
    """
    Single-panel Gauss-Legendre rule

    Arguments:
        func(Integrand): vectorised integrand
        lower(float): left end
        upper(float): right end
        nodes(int): number of nodes
    Returns:
        integral(np.ndarray): integral, shaped as one integrand value
    """
    points, weights = legendre_rule(nodes)
    half = 0.5 * (upper - lower)
    values = np.asarray(func(0.5 * (upper + lower) + half * points))
    return half * np.tensordot(weights, values, axes=(0, 0))


def adaptive_gauss(func: Integrand,
                   lower: float,
                   upper: float,
                   breakpoints: Sequence[float] = (),
                   nodes: int = 64,
                   rtol: float = 1e-9,
                   atol: float = 1e-14,
                   max_panels: int = 4096) -> np.ndarray:
    """
    Adaptive Gauss-Legendre quadrature: every panel is compared
    with the sum over its two halves and bisected until they agree

    Arguments:
        func(Integrand): vectorised integrand
        lower(float): left end
        upper(float): right end
        breakpoints(Sequence[float]): points where the integrand is not smooth
        nodes(int): nodes per panel
        rtol(float): relative tolerance
        atol(float): absolute tolerance
        max_panels(int): panel budget before giving up
    Returns:
        integral(np.ndarray): integral, shaped as one integrand value
    """
    if upper <= lower:
        return np.zeros_like(np.asarray(func(np.array([lower]))[0], dtype=float))
    ends = split_points(lower, upper, breakpoints)
    stack = [(a, b, fixed_gauss(func, a, b, nodes)) for a, b in zip(ends[:-1], ends[1:])]
    total = None
    panels = 0
    while stack:
        a, b, whole = stack.pop()
        middle = 0.5 * (a + b)
        left = fixed_gauss(func, a, middle, nodes)
        right = fixed_gauss(func, middle, b, nodes)
        halves = left + right
        error = float(np.max(np.abs(whole - halves)))
        scale = float(np.max(np.abs(halves)))
        panels += 1
        if error <= max(atol, rtol * scale) or (b - a) < 1e-12 * max(1.0, abs(upper - lower)):
            total = halves if total is None else total + halves
            continue
        if panels > max_panels:
            raise QuadratureError(
                f"Quadrature on [{lower}, {upper}] did not converge, last error {error:.3g}")
        stack.append((middle, b, right))
        stack.append((a, middle, left))
    logging.debug("Adaptive quadrature on [%s, %s] used %s panels", lower, upper, panels)
    return total


def tail_integrals(func: Integrand,
                   starts: np.ndarray,
                   upper: float,
                   breakpoints: Sequence[float] = (),
                   nodes: int = 64) -> np.ndarray:
    """
    Integrals from every start point up to a common upper end,
    computed as reverse cumulative sums of panel integrals between
    consecutive start points; exact for polynomial integrands of
    degree below 2*nodes on each smooth piece

    Arguments:
        func(Integrand): vectorised integrand
        starts(np.ndarray): lower ends, values above upper give 0
        upper(float): common upper end
        breakpoints(Sequence[float]): kinks of the integrand
        nodes(int): nodes per panel
    Returns:
        tails(np.ndarray): one integral per start point
    """
    starts = np.minimum(np.asarray(starts, dtype=float), upper)
    inner = [b for b in breakpoints if b < upper and b > np.min(starts)]
    knots = np.unique(np.concatenate([starts, np.asarray(inner, dtype=float), [upper]]))
    if knots.size == 1:
        sample = np.asarray(func(np.array([upper])))
        return np.zeros((starts.size,) + sample.shape[1:])
    panel = panel_integrals(func, knots, nodes)
    # tails[k] integrates from knots[k] to upper
    tails = np.concatenate([np.cumsum(panel[::-1], axis=0)[::-1], np.zeros((1,) + panel.shape[1:])])
    return tails[np.searchsorted(knots, starts)]


def panel_integrals(func: Integrand, knots: np.ndarray, nodes: int = 16) -> np.ndarray:
    """
    Gauss-Legendre integral over each panel between consecutive knots

    Arguments:
        func(Integrand): vectorised integrand
        knots(np.ndarray): sorted panel ends
        nodes(int): nodes per panel
    Returns:
        integrals(np.ndarray): one integral per panel
    """
    left, right = knots[:-1], knots[1:]
    points, weights = legendre_rule(nodes)
    half = 0.5 * (right - left)
    nodes_at = (0.5 * (right + left))[:, None] + half[:, None] * points[None, :]
    values = np.asarray(func(nodes_at.ravel()))
    values = values.reshape((left.size, nodes) + values.shape[1:])
    panel = np.tensordot(weights, values, axes=(0, 1))
    return panel * half.reshape((-1,) + (1,) * (panel.ndim - 1))
