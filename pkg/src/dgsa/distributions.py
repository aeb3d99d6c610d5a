"""One-dimensional input marginals and their spectral-gap constants.

Every marginal exposes vectorized ``pdf``/``cdf``/``quantile``, exact
``mean``/``variance`` where closed forms exist, and a sampler driven by the
inverse-cdf transform. The spectral-gap ("Poincare") constant of each marginal
feeds the general upper bound on total sensitivity indices; see
:func:`poincare_constant` for the resolution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar, Tuple, Union

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn, ndtr, ndtri

from .errors import ConstantUnavailableError

EULER_GAMMA = 0.5772156649015329

ArrayLike = Union[float, np.ndarray]


def _as_array(x: ArrayLike) -> np.ndarray:
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class Uniform:
    """Continuous uniform on ``[a, b]``."""

    a: float
    b: float
    kind: ClassVar[str] = "uniform"
    log_concave: ClassVar[bool] = True

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"uniform requires a < b, got a={self.a}, b={self.b}")

    def pdf(self, x: ArrayLike) -> ArrayLike:
        x = _as_array(x)
        return np.where((x >= self.a) & (x <= self.b), 1.0 / (self.b - self.a), 0.0)

    def cdf(self, x: ArrayLike) -> ArrayLike:
        x = _as_array(x)
        return np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0)

    def quantile(self, p: ArrayLike) -> ArrayLike:
        p = _check_prob(p)
        return self.a + p * (self.b - self.a)

    def support(self) -> Tuple[float, float]:
        return (self.a, self.b)

    def mean(self) -> float:
        return 0.5 * (self.a + self.b)

    def variance(self) -> float:
        return (self.b - self.a) ** 2 / 12.0


@dataclass(frozen=True)
class Normal:
    """Gaussian with mean ``mu`` and standard deviation ``sigma``."""

    mu: float
    sigma: float
    kind: ClassVar[str] = "normal"
    log_concave: ClassVar[bool] = True

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"normal requires sigma > 0, got {self.sigma}")

    def pdf(self, x: ArrayLike) -> ArrayLike:
        z = (_as_array(x) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))

    def cdf(self, x: ArrayLike) -> ArrayLike:
        return ndtr((_as_array(x) - self.mu) / self.sigma)

    def quantile(self, p: ArrayLike) -> ArrayLike:
        p = _check_prob(p)
        return self.mu + self.sigma * ndtri(p)

    def support(self) -> Tuple[float, float]:
        return (-math.inf, math.inf)

    def mean(self) -> float:
        return self.mu

    def variance(self) -> float:
        return self.sigma**2


@dataclass(frozen=True)
class Exponential:
    """Exponential with rate ``lam`` (density ``lam * exp(-lam x)`` on ``x >= 0``)."""

    lam: float
    kind: ClassVar[str] = "exponential"
    log_concave: ClassVar[bool] = True

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"exponential requires lam > 0, got {self.lam}")

    def pdf(self, x: ArrayLike) -> ArrayLike:
        x = _as_array(x)
        return np.where(x >= 0, self.lam * np.exp(-self.lam * np.maximum(x, 0)), 0.0)

    def cdf(self, x: ArrayLike) -> ArrayLike:
        x = _as_array(x)
        return np.where(x >= 0, -np.expm1(-self.lam * np.maximum(x, 0)), 0.0)

    def quantile(self, p: ArrayLike) -> ArrayLike:
        p = _check_prob(p)
        with np.errstate(divide="ignore"):
            return -np.log1p(-p) / self.lam

    def support(self) -> Tuple[float, float]:
        return (0.0, math.inf)

    def mean(self) -> float:
        return 1.0 / self.lam

    def variance(self) -> float:
        return 1.0 / self.lam**2


@dataclass(frozen=True)
class Gumbel:
    """Gumbel (type-I extreme value) with location ``mu`` and scale ``beta``."""

    mu: float
    beta: float
    kind: ClassVar[str] = "gumbel"
    log_concave: ClassVar[bool] = True

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"gumbel requires beta > 0, got {self.beta}")

    def pdf(self, x: ArrayLike) -> ArrayLike:
        z = (_as_array(x) - self.mu) / self.beta
        return np.exp(-z - np.exp(-z)) / self.beta

    def cdf(self, x: ArrayLike) -> ArrayLike:
        z = (_as_array(x) - self.mu) / self.beta
        return np.exp(-np.exp(-z))

    def quantile(self, p: ArrayLike) -> ArrayLike:
        p = _check_prob(p)
        with np.errstate(divide="ignore"):
            return self.mu - self.beta * np.log(-np.log(p))

    def support(self) -> Tuple[float, float]:
        return (-math.inf, math.inf)

    def mean(self) -> float:
        return self.mu + self.beta * EULER_GAMMA

    def variance(self) -> float:
        return math.pi**2 * self.beta**2 / 6.0


@dataclass(frozen=True)
class Weibull:
    """Weibull with shape ``k >= 1`` and scale ``lam``.

    The shape restriction keeps the density log-concave, which the truncated
    spectral-gap rule relies on; ``k = 1`` coincides with ``Exponential(1/lam)``.
    """

    k: float
    lam: float
    kind: ClassVar[str] = "weibull"
    log_concave: ClassVar[bool] = True

    def __post_init__(self):
        if not self.k >= 1:
            raise ValueError(f"weibull requires shape k >= 1, got {self.k}")
        if not self.lam > 0:
            raise ValueError(f"weibull requires scale lam > 0, got {self.lam}")

    def pdf(self, x: ArrayLike) -> ArrayLike:
        x = _as_array(x)
        xp = np.maximum(x, 0.0)
        z = xp / self.lam
        with np.errstate(divide="ignore"):
            val = (self.k / self.lam) * z ** (self.k - 1.0) * np.exp(-(z**self.k))
        return np.where(x >= 0, val, 0.0)

    def cdf(self, x: ArrayLike) -> ArrayLike:
        x = _as_array(x)
        z = np.maximum(x, 0.0) / self.lam
        return np.where(x >= 0, -np.expm1(-(z**self.k)), 0.0)

    def quantile(self, p: ArrayLike) -> ArrayLike:
        p = _check_prob(p)
        with np.errstate(divide="ignore"):
            return self.lam * (-np.log1p(-p)) ** (1.0 / self.k)

    def support(self) -> Tuple[float, float]:
        return (0.0, math.inf)

    def mean(self) -> float:
        return self.lam * gamma_fn(1.0 + 1.0 / self.k)

    def variance(self) -> float:
        g1 = gamma_fn(1.0 + 1.0 / self.k)
        g2 = gamma_fn(1.0 + 2.0 / self.k)
        return self.lam**2 * (g2 - g1**2)


@dataclass(frozen=True)
class Truncated:
    """A base marginal conditioned to ``[a, b]``.

    Nested truncation is rejected: truncate the original base with tighter
    bounds instead.
    """

    base: "InputDistribution"
    a: float
    b: float
    kind: ClassVar[str] = "truncated"

    def __post_init__(self):
        if isinstance(self.base, Truncated):
            raise ValueError("truncating an already truncated marginal is not supported")
        if not self.a < self.b:
            raise ValueError(f"truncation requires a < b, got a={self.a}, b={self.b}")
        if not self._mass() > 0:
            raise ValueError(
                f"truncation interval [{self.a}, {self.b}] carries no probability mass"
            )

    def _mass(self) -> float:
        return float(self.base.cdf(self.b) - self.base.cdf(self.a))

    @property
    def log_concave(self) -> bool:
        # truncation preserves log-concavity of the base density
        return self.base.log_concave

    def pdf(self, x: ArrayLike) -> ArrayLike:
        x = _as_array(x)
        inside = (x >= self.a) & (x <= self.b)
        return np.where(inside, self.base.pdf(x) / self._mass(), 0.0)

    def cdf(self, x: ArrayLike) -> ArrayLike:
        x = _as_array(x)
        fa = self.base.cdf(self.a)
        raw = (self.base.cdf(np.clip(x, self.a, self.b)) - fa) / self._mass()
        return np.clip(raw, 0.0, 1.0)

    def quantile(self, p: ArrayLike) -> ArrayLike:
        p = _check_prob(p)
        fa = self.base.cdf(self.a)
        return self.base.quantile(fa + p * self._mass())

    def support(self) -> Tuple[float, float]:
        lo, hi = self.base.support()
        return (max(lo, self.a), min(hi, self.b))

    def mean(self) -> float:
        val, _ = quad(lambda x: x * self.pdf(x), self.a, self.b, limit=200)
        return val

    def variance(self) -> float:
        m = self.mean()
        val, _ = quad(lambda x: (x - m) ** 2 * self.pdf(x), self.a, self.b, limit=200)
        return val


InputDistribution = Union[Uniform, Normal, Exponential, Gumbel, Weibull, Truncated]

_KINDS = {"uniform", "normal", "exponential", "gumbel", "weibull", "truncated"}


def _check_prob(p: ArrayLike) -> np.ndarray:
    """Validate quantile arguments. The endpoints 0 and 1 are tolerated and map
    to the (possibly infinite) support endpoints; anything else outside (0, 1)
    raises."""
    p = _as_array(p)
    if not np.all((p >= 0.0) & (p <= 1.0)):
        raise ValueError("quantile argument must lie in (0, 1)")
    return p


def sample(dist: InputDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` variates by pushing uniform noise through the quantile."""
    return np.asarray(dist.quantile(rng.random(n)))


def median(dist: InputDistribution) -> float:
    return float(dist.quantile(0.5))


@dataclass(frozen=True)
class InputSpace:
    """Ordered tuple of independent marginals, one per input coordinate."""

    marginals: Tuple[InputDistribution, ...]

    def __post_init__(self):
        if len(self.marginals) < 1:
            raise ValueError("input space needs at least one marginal")

    @property
    def dimension(self) -> int:
        return len(self.marginals)

    def quantile_transform(self, unit_points: np.ndarray) -> np.ndarray:
        """Map an ``(n, d)`` matrix of unit-cube coordinates into the input space."""
        unit_points = np.atleast_2d(np.asarray(unit_points, dtype=float))
        if unit_points.shape[1] != self.dimension:
            raise ValueError(
                f"points have {unit_points.shape[1]} columns, space has dimension {self.dimension}"
            )
        cols = [m.quantile(unit_points[:, i]) for i, m in enumerate(self.marginals)]
        return np.column_stack(cols)

    def supports(self) -> list[Tuple[float, float]]:
        return [m.support() for m in self.marginals]

    def is_unit_uniform(self, i: int) -> bool:
        m = self.marginals[i]
        return isinstance(m, Uniform) and m.a == 0.0 and m.b == 1.0


def uniform_unit_space(d: int) -> InputSpace:
    """The unit hypercube: ``d`` independent Uniform(0, 1) marginals."""
    return InputSpace(tuple(Uniform(0.0, 1.0) for _ in range(d)))


# --- spectral-gap ("Poincare") constants -----------------------------------

CHEEGER_GRID_SIZE = 10_001
_CHEEGER_P_RANGE = (1e-6, 1.0 - 1e-6)


def poincare_tabulated(dist: InputDistribution) -> float | None:
    """Best known constant for the built-in families, or None if untabulated.

    Uniform and normal entries are the optimal constants; the Gumbel and
    Weibull entries are the best published ones.
    """
    if isinstance(dist, Uniform):
        return (dist.b - dist.a) ** 2 / math.pi**2
    if isinstance(dist, Normal):
        return dist.sigma**2
    if isinstance(dist, Exponential):
        return 4.0 / dist.lam**2
    if isinstance(dist, Gumbel):
        return (2.0 * dist.beta / math.log(2.0)) ** 2
    if isinstance(dist, Weibull):
        return (2.0 * dist.lam * math.log(2.0) ** ((1.0 - dist.k) / dist.k) / dist.k) ** 2
    return None


def poincare_log_concave(dist: InputDistribution) -> float:
    """Generic rule for log-concave densities: ``1 / f(median)^2``.

    Not optimal for uniform or normal marginals, which is why tabulated
    constants take precedence in :func:`poincare_constant`.
    """
    if not dist.log_concave:
        raise ConstantUnavailableError(f"{dist.kind} marginal is not log-concave")
    f_med = float(dist.pdf(median(dist)))
    if not f_med > 0:
        raise ConstantUnavailableError("density vanishes at the median")
    return 1.0 / f_med**2


def poincare_truncated(dist: Truncated) -> float:
    """Rule for a log-concave base truncated to ``[a, b]``.

    Uses the base cdf/pdf/quantile: ``(F(b)-F(a))^2 / f(q((F(a)+F(b))/2))^2``.
    """
    if not dist.base.log_concave:
        raise ConstantUnavailableError(
            "truncated spectral-gap rule needs a log-concave base density"
        )
    base = dist.base
    fa = float(base.cdf(dist.a))
    fb = float(base.cdf(dist.b))
    f_mid = float(base.pdf(base.quantile(0.5 * (fa + fb))))
    if not f_mid > 0:
        raise ConstantUnavailableError("base density vanishes at the truncation midpoint")
    return (fb - fa) ** 2 / f_mid**2


def poincare_cheeger(dist: InputDistribution, grid_size: int = CHEEGER_GRID_SIZE) -> float:
    """Isoperimetric fallback ``4 * [sup min(F, 1-F) / f]^2``.

    The sup is taken on a fixed quantile grid (uniform in probability), so
    heavy tails cost no special casing. Always an upper bound on the optimal
    constant, often a loose one.
    """
    p = np.linspace(*_CHEEGER_P_RANGE, grid_size)
    x = np.asarray(dist.quantile(p))
    f = np.asarray(dist.pdf(x))
    if np.any(f <= 0):
        raise ConstantUnavailableError(
            f"{dist.kind} density vanishes inside its support; no constant available"
        )
    ratio = np.minimum(p, 1.0 - p) / f
    return float(4.0 * np.max(ratio) ** 2)


def poincare_constant(dist: InputDistribution) -> float:
    """Spectral-gap constant with the resolution order: tabulated best-known
    value, then the truncated log-concave rule, then the generic log-concave
    rule, then the Cheeger fallback."""
    tab = poincare_tabulated(dist)
    if tab is not None:
        return tab
    if isinstance(dist, Truncated):
        return poincare_truncated(dist)
    if getattr(dist, "log_concave", False):
        return poincare_log_concave(dist)
    return poincare_cheeger(dist)
