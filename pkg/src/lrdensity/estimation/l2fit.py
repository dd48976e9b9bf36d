"""
L2fit module contains the local L2 distribution estimator, which
projects the EDF on the local basis under a fixed design measure G
instead of the empirical one, its plug-in variance, and the
numerical-derivative density estimator built from the same kernel
weights.

Both need the support of the data, they do not estimate it.
"""

from dataclasses import dataclass
import logging
from typing import Callable
import numpy as np
from lrdensity.errors import SingularGram, ValidationError
from lrdensity.estimation.basis_kernel import (
    KernelSpec, basis_eval, derivative_basis, kernel_eval, scaling_vector)
from lrdensity.estimation.edf import EdfValues, SortedSample, edf_eval
from lrdensity.estimation.fit_local import FitConfig, PointFit, fit_point, local_window, sigma_hat
from lrdensity.lrdutils import symmetric_inverse
from lrdensity.quadrature import adaptive_gauss, panel_integrals, split_points, tail_integrals

DESIGN_KINDS = ("lebesgue", "known_density", "empirical")


@dataclass(frozen=True)
class DesignSpec:
    """
    Design measure G of the local L2 projection

    Parameters:
        kind(str): lebesgue, known_density or empirical
        support(tuple[float, float]|None): support of the data,
        required unless the design is empirical
        density(Callable|None): vectorised g for known_density,
        nonnegative on the support
    """
    kind: str = "lebesgue"
    support: tuple[float, float] | None = None
    density: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.kind not in DESIGN_KINDS:
            raise ValidationError(f"Unknown design {self.kind}, use one of {', '.join(DESIGN_KINDS)}")
        if self.kind == "empirical":
            return
        if self.support is None:
            raise ValidationError(f"Design {self.kind} needs the support of the data")
        lower, upper = self.support
        if not (np.isfinite(lower) and np.isfinite(upper) and lower < upper):
            raise ValidationError(f"Support {self.support} should be a finite interval")
        if self.kind == "known_density" and self.density is None:
            raise ValidationError("Known density design needs the density g")

    def weight(self, t: np.ndarray) -> np.ndarray:
        """
        g(t) on the support, zero outside
        """
        lower, upper = self.support
        inside = (t >= lower) & (t <= upper)
        if self.kind == "lebesgue":
            return inside.astype(float)
        values = np.asarray(self.density(t), dtype=float)
        if np.any(values[inside] < 0):
            raise ValidationError("Design density is negative on the support")
        return np.where(inside, values, 0.0)


def _window_region(design: DesignSpec, h: float, x: float) -> tuple[float, float]:
    # kernel window intersected with the support, normalised coordinates
    lower, upper = design.support
    start = max(-1.0, (lower - x) / h)
    stop = min(1.0, (upper - x) / h)
    if not start < stop:
        raise ValidationError(f"Kernel window around {x:.6g} misses the support {design.support}")
    return start, stop


def _weighted_basis(cfg: FitConfig, design: DesignSpec, x: float) -> Callable[[np.ndarray], np.ndarray]:
    def func(u: np.ndarray) -> np.ndarray:
        weights = kernel_eval(cfg.kernel, u) * design.weight(x + cfg.h * u)
        return basis_eval(cfg.basis, u).reshape(-1, cfg.basis.dim) * weights[:, None]
    return func


def design_gram(cfg: FitConfig, design: DesignSpec, x: float) -> np.ndarray:
    """
    Gamma_G = int R(u) R(u)' K(u) g(x + h u) du over the window
    """
    start, stop = _window_region(design, cfg.h, x)
    weighted = _weighted_basis(cfg, design, x)

    def gram(u: np.ndarray) -> np.ndarray:
        return weighted(u)[:, :, None] * basis_eval(cfg.basis, u).reshape(-1, cfg.basis.dim)[:, None, :]

    return adaptive_gauss(gram, start, stop, cfg.kernel.breakpoints)


def _edf_projection(s: SortedSample, cfg: FitConfig, design: DesignSpec, x: float,
                    start: float, stop: float) -> np.ndarray:
    # F-hat is constant between data points, so one panel per step
    u = (s.values - x) / cfg.h
    inner = u[(u > start) & (u < stop)]
    knots = np.unique(np.concatenate([split_points(start, stop, cfg.kernel.breakpoints), inner]))
    panels = panel_integrals(_weighted_basis(cfg, design, x), knots)
    steps = edf_eval(s, x + cfg.h * 0.5 * (knots[:-1] + knots[1:]))
    return steps @ panels


def _influence_l2(s: SortedSample, cfg: FitConfig, design: DesignSpec, x: float,
                  start: float, stop: float, centre: np.ndarray) -> np.ndarray:
    # a_i = w_i int_{u_i}^{stop} R K g - centre
    u = np.clip((s.values - x) / cfg.h, start, stop)
    tails = tail_integrals(_weighted_basis(cfg, design, x), u, stop, cfg.kernel.breakpoints)
    return s.weights[:, None] * tails - centre


def l2_fit_point(s: SortedSample, edf: EdfValues, cfg: FitConfig, design: DesignSpec, x: float) -> PointFit:
    """
    Local L2 projection of the EDF:
    theta_G = Gamma_G^-1 int R(u) F-hat(x + h u) K(u) g(x + h u) du;
    the empirical design reproduces fit_point

    Arguments:
        s(SortedSample): sample
        edf(EdfValues): EDF at the observations
        cfg(FitConfig): settings
        design(DesignSpec): design measure
        x(float): evaluation point
    Returns:
        fit(PointFit): estimates, influence vectors psi = a_i and
        sigma = (1/n^2) sum a_i a_i', the convention of fit_point
    """
    if design.kind == "empirical":
        return fit_point(s, edf, cfg, x)
    start, stop = _window_region(design, cfg.h, x)
    gamma = design_gram(cfg, design, x)
    gamma_inv = symmetric_inverse(gamma, SingularGram, f"Design Gram matrix at {x:.6g}")
    numerator = _edf_projection(s, cfg, design, x, start, stop)
    theta_normalized = gamma_inv @ numerator
    psi = _influence_l2(s, cfg, design, x, start, stop, numerator)
    sigma = sigma_hat(psi)
    omega = gamma_inv @ sigma @ gamma_inv
    window = local_window(s, cfg.kernel, cfg.h, x)
    if window.n_local < cfg.basis.dim:
        logging.info("L2 fit at %s uses %s local observations", x, window.n_local)
    return PointFit(
        x=float(x), h=cfg.h, basis=cfg.basis,
        theta=scaling_vector(cfg.basis, cfg.h) * theta_normalized,
        theta_normalized=theta_normalized,
        gamma=gamma, sigma=sigma, omega=(omega + omega.T) / 2,
        n_local=window.n_local, n=s.n, psi=psi)


def l2_sigma_hat(s: SortedSample, edf: EdfValues, cfg: FitConfig, design: DesignSpec, x: float) -> np.ndarray:
    """
    Plug-in Sigma_h = (1/n) sum_i b_i b_i' with
    b_i = int R(u) K(u) g (1(x_i <= x + h u) - F-hat(x + h u)) du,
    normalised coordinates

    Arguments:
        s(SortedSample): sample
        edf(EdfValues): EDF at the observations
        cfg(FitConfig): settings
        design(DesignSpec): design measure
        x(float): evaluation point
    Returns:
        sigma(np.ndarray): dim x dim matrix
    """
    return s.n * l2_fit_point(s, edf, cfg, design, x).sigma


def nd_estimate(s: SortedSample, cfg: FitConfig, support: tuple[float, float], x: float) -> np.ndarray:
    """
    Density and derivatives from kernel-weighted P-dot moments:
    theta_ND = Gamma_ND^-1 (1/n) sum_i w_i P-dot(u_i) K(u_i)/h with
    Gamma_ND = int P-dot P-dot' K over the window inside the support

    Arguments:
        s(SortedSample): sample
        cfg(FitConfig): settings, cfg.basis.p sets the order
        support(tuple[float, float]): support of the data
        x(float): evaluation point
    Returns:
        estimates(np.ndarray): (f, f', ..., f^(p-1)) at x
    """
    p = cfg.basis.p
    start, stop = _window_region(DesignSpec("lebesgue", tuple(support)), cfg.h, x)

    def gram(u: np.ndarray) -> np.ndarray:
        values = derivative_basis(p, u).reshape(-1, p)
        return values[:, :, None] * values[:, None, :] * kernel_eval(cfg.kernel, u)[:, None, None]

    gamma = adaptive_gauss(gram, start, stop, cfg.kernel.breakpoints)
    gamma_inv = symmetric_inverse(gamma, SingularGram, f"Derivative Gram matrix at {x:.6g}")
    window = local_window(s, cfg.kernel, cfg.h, x)
    moments = (derivative_basis(p, window.u).reshape(-1, p)
               * (s.weights[window.start:window.stop] * window.kernel_weights)[:, None]).sum(axis=0) / s.n
    return (gamma_inv @ moments) * cfg.h ** (-np.arange(p, dtype=float))


def nd_asy_variance(p: int, deriv: int, kernel: KernelSpec,
                    region: tuple[float, float] = (-1.0, 1.0)) -> float:
    """
    Asymptotic variance constant of the derivative estimator,
    e'Gamma^-1 (int P-dot P-dot' K^2) Gamma^-1 e with f = 1
    """
    if not 0 <= deriv <= p - 1:
        raise ValidationError(f"Derivative order {deriv} is not available with p={p}")
    lower, upper = region

    def design(u: np.ndarray) -> np.ndarray:
        values = derivative_basis(p, u).reshape(-1, p)
        return values[:, :, None] * values[:, None, :]

    gamma = adaptive_gauss(lambda u: design(u) * kernel_eval(kernel, u)[:, None, None],
                           lower, upper, kernel.breakpoints)
    meat = adaptive_gauss(lambda u: design(u) * kernel_eval(kernel, u)[:, None, None] ** 2,
                          lower, upper, kernel.breakpoints)
    gamma_inv = np.linalg.inv(gamma)
    return float((gamma_inv @ meat @ gamma_inv)[deriv, deriv])


def kde(s: SortedSample, kernel: KernelSpec, h: float, x: float) -> float:
    """
    Plain kernel density estimate (1/n) sum_i w_i K(u_i)/h
    """
    window = local_window(s, kernel, h, x)
    return float(np.sum(s.weights[window.start:window.stop] * window.kernel_weights) / s.n)

