"""
Dgp module contains the data generating processes of the Monte
Carlo experiments with closed-form distribution function,
density and density derivative.
"""

from dataclasses import dataclass
import numpy as np
from scipy.stats import expon, norm, uniform
from lrdensity.errors import ValidationError

DGP_KINDS = ("gaussian", "exponential", "uniform", "kinked")


@dataclass(frozen=True)
class DgpSpec:
    """
    Data generating process

    Parameters:
        kind(str): gaussian, exponential, uniform or kinked
        loc(float): mean of the gaussian
        scale(float): standard deviation of the gaussian
        rate(float): rate of the exponential on [0, inf)
        lower(float): left end of the uniform
        upper(float): right end of the uniform
        slope_left(float): density slope on [-1, 0) of the kinked law
        slope_right(float): density slope on [0, 1] of the kinked law;
        its density is continuous at 0 with the level fixed by mass one
    """
    kind: str = "gaussian"
    loc: float = 0.0
    scale: float = 1.0
    rate: float = 1.0
    lower: float = 0.0
    upper: float = 1.0
    slope_left: float = 0.4
    slope_right: float = -0.4

    def __post_init__(self):
        if self.kind not in DGP_KINDS:
            raise ValidationError(f"Unknown DGP {self.kind}, use one of {', '.join(DGP_KINDS)}")
        if not (self.scale > 0 and self.rate > 0 and self.upper > self.lower):
            raise ValidationError("DGP scale, rate and support should be positive and well ordered")
        if self.kind == "kinked":
            level = self.level
            if level - self.slope_left < 0 or level + self.slope_right < 0:
                raise ValidationError("Kinked density would be negative at the support ends")

    @property
    def level(self) -> float:
        """
        f(0) of the kinked law
        """
        return (1 + self.slope_left / 2 - self.slope_right / 2) / 2

    @property
    def support(self) -> tuple[float, float]:
        """
        Support of the law
        """
        return {"gaussian": (-np.inf, np.inf), "exponential": (0.0, np.inf),
                "uniform": (self.lower, self.upper), "kinked": (-1.0, 1.0)}[self.kind]

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """
        Points where the density is not smooth
        """
        return {"gaussian": (), "exponential": (0.0,),
                "uniform": (self.lower, self.upper), "kinked": (-1.0, 0.0, 1.0)}[self.kind]

    def _frozen(self):
        if self.kind == "gaussian":
            return norm(loc=self.loc, scale=self.scale)
        if self.kind == "exponential":
            return expon(scale=1 / self.rate)
        return uniform(loc=self.lower, scale=self.upper - self.lower)

    def cdf(self, x):
        """
        Distribution function
        """
        x = np.asarray(x, dtype=float)
        if self.kind != "kinked":
            return self._frozen().cdf(x)
        a, left, right = self.level, self.slope_left, self.slope_right
        below = a * (x + 1) + left * (x ** 2 - 1) / 2
        above = (a - left / 2) + a * x + right * x ** 2 / 2
        values = np.where(x < 0, below, above)
        return np.where(x < -1, 0.0, np.where(x > 1, 1.0, values))

    def pdf(self, x):
        """
        Density, right-continuous at kinks and support ends
        """
        x = np.asarray(x, dtype=float)
        if self.kind != "kinked":
            return self._frozen().pdf(x)
        values = self.level + np.where(x < 0, self.slope_left, self.slope_right) * x
        return np.where((x >= -1) & (x <= 1), values, 0.0)

    def dpdf(self, x, side: str | None = None):
        """
        Density derivative; at 0 the kinked law needs side left or right
        (right by default)
        """
        x = np.asarray(x, dtype=float)
        if self.kind == "gaussian":
            return -(x - self.loc) / self.scale ** 2 * self.pdf(x)
        if self.kind == "exponential":
            return np.where(x >= 0, -self.rate * self.pdf(x), 0.0)
        if self.kind == "uniform":
            return np.zeros_like(x)
        left = (x < 0) | ((x == 0) & (side == "left"))
        slopes = np.where(left, self.slope_left, self.slope_right)
        return np.where((x >= -1) & (x <= 1), slopes, 0.0)

    def truth(self, x, deriv: int, side: str | None = None):
        """
        F for deriv -1, f for 0, f' for 1
        """
        if deriv == -1:
            return self.cdf(x)
        if deriv == 0:
            return self.pdf(x)
        if deriv == 1:
            return self.dpdf(x, side)
        raise ValidationError(f"Truth is available up to the first derivative, asked for {deriv}")

    def quantile(self, q):
        """
        Inverse distribution function
        """
        q = np.asarray(q, dtype=float)
        if self.kind != "kinked":
            return self._frozen().ppf(q)
        a = self.level
        residual = q - (a - self.slope_left / 2)
        slope = np.where(residual < 0, self.slope_left, self.slope_right)
        # stable root of slope/2 x^2 + a x - residual = 0
        return 2 * residual / (a + np.sqrt(np.maximum(a * a + 2 * slope * residual, 0.0)))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """
        n draws from rng; the kinked law by inversion
        """
        if n < 1:
            raise ValidationError(f"Sample size should be positive, got {n}")
        if self.kind != "kinked":
            return self._frozen().rvs(size=n, random_state=rng)
        return self.quantile(rng.random(n))
