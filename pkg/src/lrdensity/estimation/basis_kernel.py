"""
Basis kernel module contains kernel functions and the local
bases R(u) used by the estimators: the polynomial basis with
factorial scaling u^k/k!, an optional redundant regressor Q,
the split basis with one-sided terms, the scaling matrix
Upsilon_h and the derivative basis P-dot.

Everything is evaluated in normalised coordinates u = (x_i - x)/h.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import factorial
import numpy as np
from lrdensity.errors import ValidationError

KERNEL_KINDS = ("uniform", "triangular", "epanechnikov")
PARITIES = ("odd", "even")


@dataclass(frozen=True)
class KernelSpec:
    """
    Compactly supported symmetric kernel on [-1, 1]

    Parameters:
        kind(str): one of uniform, triangular, epanechnikov
    """
    kind: str = "triangular"

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValidationError(
                f"Unknown kernel {self.kind}, available kernels are {', '.join(KERNEL_KINDS)}")

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """
        Points inside (-1, 1) where the kernel is not smooth
        """
        return (0.0,) if self.kind == "triangular" else ()


def kernel_eval(k: KernelSpec, u):
    """
    Evaluates the kernel; zero outside [-1, 1]

    Arguments:
        k(KernelSpec): kernel
        u(float|np.ndarray): evaluation points
    Returns:
        values(float|np.ndarray): kernel values, same shape as u
    """
    u = np.asarray(u, dtype=float)
    distance = np.abs(u)
    inside = distance <= 1
    if k.kind == "uniform":
        values = np.where(inside, 0.5, 0.0)
    elif k.kind == "triangular":
        values = np.where(inside, 1.0 - distance, 0.0)
    else:
        values = np.where(inside, 0.75 * (1.0 - u * u), 0.0)
    return float(values) if values.ndim == 0 else values


@dataclass(frozen=True)
class RedundantSpec:
    """
    Redundant regressor Q(u) appended to the polynomial basis

    Parameters:
        j(int): order index, at least 1
        parity(str): odd gives u^(2j+1), even gives u^(2j+2)
        orthogonalized(bool): if set, Q is orthogonalised against
        (1, P) on [-1, 1] under Lebesgue measure
    """
    j: int = 1
    parity: str = "odd"
    orthogonalized: bool = False

    def __post_init__(self):
        if self.j < 1:
            raise ValidationError(f"Redundant regressor index should be at least 1, got {self.j}")
        if self.parity not in PARITIES:
            raise ValidationError(f"Unknown parity {self.parity}, use odd or even")

    @property
    def degree(self) -> int:
        """
        Degree of the leading monomial of Q
        """
        return 2 * self.j + 1 if self.parity == "odd" else 2 * self.j + 2

    @classmethod
    def for_derivative(cls, j: int, deriv: int, orthogonalized: bool = False) -> "RedundantSpec":
        """
        Picks the parity matching the target: odd Q for even
        derivative orders, even Q for odd ones
        """
        return cls(j, "odd" if deriv % 2 == 0 else "even", orthogonalized)


@dataclass(frozen=True)
class BasisSpec:
    """
    Local basis R(u)

    Parameters:
        p(int): polynomial order
        redundant(RedundantSpec|None): redundant regressor, appended last
        split_from(int|None): lowest order whose terms are split into
        u^k/k! 1(u<0) and u^k/k! 1(u>=0); None keeps the basis unsplit
    """
    p: int = 2
    redundant: RedundantSpec | None = None
    split_from: int | None = None

    def __post_init__(self):
        if self.p < 0:
            raise ValidationError(f"Polynomial order should be nonnegative, got {self.p}")
        if self.redundant is not None and self.redundant.degree <= self.p:
            raise ValidationError(
                f"Redundant regressor u^{self.redundant.degree} is collinear with order {self.p}")
        if self.split_from is not None:
            if not 1 <= self.split_from <= self.p:
                raise ValidationError(
                    f"Split order {self.split_from} should lie between 1 and {self.p}")
            if self.redundant is not None:
                raise ValidationError("Split bases do not take a redundant regressor")

    @property
    def columns(self) -> tuple[tuple[int, str | None], ...]:
        """
        (monomial degree, side) per column; side is left, right,
        None for unsplit terms or "q" for the redundant regressor
        """
        columns = []
        for k in range(self.p + 1):
            if self.split_from is not None and k >= self.split_from:
                columns.extend([(k, "left"), (k, "right")])
            else:
                columns.append((k, None))
        if self.redundant is not None:
            columns.append((self.redundant.degree, "q"))
        return tuple(columns)

    @property
    def dim(self) -> int:
        """
        Basis dimension
        """
        return len(self.columns)

    @property
    def q_index(self) -> int | None:
        """
        Position of the redundant regressor, if any
        """
        return self.dim - 1 if self.redundant is not None else None

    @property
    def degrees(self) -> np.ndarray:
        """
        Monomial degree per column, used for scaling
        """
        return np.array([k for k, _ in self.columns], dtype=float)

    def without_redundant(self) -> "BasisSpec":
        """
        Same basis with Q dropped
        """
        return BasisSpec(self.p, None, self.split_from)


def monomial_moment(k: int, lower: float = -1.0, upper: float = 1.0) -> float:
    """
    Integral of u^k over [lower, upper]
    """
    return (upper ** (k + 1) - lower ** (k + 1)) / (k + 1)


@lru_cache(maxsize=64)
def orthogonal_coefficients(p: int, degree: int) -> tuple[float, ...]:
    """
    Coefficients M such that u^degree - S(u)'M is orthogonal to
    S(u) = (1, u, ..., u^p/p!) on [-1, 1] under Lebesgue measure
    """
    gram = np.array([[monomial_moment(a + b) / (factorial(a) * factorial(b))
                      for b in range(p + 1)] for a in range(p + 1)])
    target = np.array([monomial_moment(a + degree) / factorial(a) for a in range(p + 1)])
    return tuple(np.linalg.solve(gram, target))


def _monomials(p: int, u: np.ndarray) -> np.ndarray:
    return np.stack([u ** k / factorial(k) for k in range(p + 1)], axis=-1)


def basis_eval(b: BasisSpec, u):
    """
    Evaluates R(u)

    Arguments:
        b(BasisSpec): basis
        u(float|np.ndarray): points
    Returns:
        values(np.ndarray): vector of length dim for scalar u,
        otherwise an array of shape (len(u), dim)
    """
    points = np.atleast_1d(np.asarray(u, dtype=float))
    columns = []
    for k, side in b.columns:
        if side == "q":
            term = points ** k
            if b.redundant.orthogonalized:
                term = term - _monomials(b.p, points) @ np.array(orthogonal_coefficients(b.p, k))
        else:
            term = points ** k / factorial(k)
            if side == "left":
                term = term * (points < 0)
            elif side == "right":
                term = term * (points >= 0)
        columns.append(term)
    values = np.stack(columns, axis=-1)
    return values[0] if np.ndim(u) == 0 else values


def scaling_matrix(b: BasisSpec, h: float) -> np.ndarray:
    """
    Diagonal Upsilon_h with entries h^(-degree), so that
    Upsilon_h R(u) = R(u/h) for monomial bases

    Arguments:
        b(BasisSpec): basis
        h(float): bandwidth
    Returns:
        upsilon(np.ndarray): diagonal matrix
    """
    return np.diag(scaling_vector(b, h))


def scaling_vector(b: BasisSpec, h: float) -> np.ndarray:
    """
    Diagonal of Upsilon_h
    """
    if not h > 0:
        raise ValidationError(f"Bandwidth should be positive, got {h}")
    return float(h) ** (-b.degrees)


def change_of_basis(b: BasisSpec) -> np.ndarray:
    """
    Unit lower-triangular L with R(u) = L R_mono(u), where R_mono
    carries the raw monomial u^degree in place of an orthogonalised Q;
    the dilation identity then reads R(u/h) = L Upsilon_h L^(-1) R(u)
    """
    transform = np.eye(b.dim)
    if b.redundant is not None and b.redundant.orthogonalized:
        coefficients = orthogonal_coefficients(b.p, b.redundant.degree)
        transform[b.q_index, :b.p + 1] = -np.array(coefficients)
    return transform


def target_index(b: BasisSpec, deriv: int, side: str | None = None) -> int:
    """
    Position in R of the coefficient estimating f^(deriv);
    deriv -1 selects the distribution function

    Arguments:
        b(BasisSpec): basis
        deriv(int): derivative order, -1 for the CDF
        side(str|None): left or right for split terms
    Returns:
        index(int): coefficient position
    """
    order = deriv + 1
    if order < 0 or order > b.p:
        raise ValidationError(f"Derivative order {deriv} is not estimable with p={b.p}")
    for index, (k, column_side) in enumerate(b.columns):
        if k != order or column_side == "q":
            continue
        if column_side is None or column_side == side:
            return index
    raise ValidationError(f"Order {order} is split, choose side left or right")


def derivative_basis(p: int, u):
    """
    P-dot(u) = (1, u, ..., u^(p-1)/(p-1)!)

    Arguments:
        p(int): polynomial order, at least 1
        u(float|np.ndarray): points
    Returns:
        values(np.ndarray): vector of length p for scalar u,
        otherwise an array of shape (len(u), p)
    """
    if p < 1:
        raise ValidationError("Derivative basis needs p of at least 1")
    points = np.atleast_1d(np.asarray(u, dtype=float))
    values = _monomials(p - 1, points)
    return values[0] if np.ndim(u) == 0 else values
