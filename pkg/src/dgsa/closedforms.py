"""Analytic sensitivity quantities for the built-in test families.

These closed forms exercise the bound formulas without any sampling: the
product ("g-") function admits exact variance shares and bounds for any
coefficient vector, and the family of models linear in one coordinate,
``G = a(z) x_i + b(z)``, admits exact bounds parameterized by the two moments
``int a`` and ``int a^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from .bounds import M_SEARCH_RANGE, maximize_gamma

PI2 = math.pi**2


@dataclass(frozen=True)
class GFunctionReference:
    """Exact quantities for the product model with coefficients ``a``."""

    a: np.ndarray
    variance: float
    s: np.ndarray
    s_tot: np.ndarray
    nu: np.ndarray
    sigma_small: np.ndarray
    ub1: np.ndarray
    ub2: np.ndarray
    lb1: np.ndarray  # identically zero for this family
    lb2: np.ndarray
    m_star: float

    def gamma(self, m: float, i: int) -> float:
        """The exponent-``m`` lower bound for input ``i``."""
        return gfunction_gamma_factor(m) / ((1.0 + self.a[i]) ** 2 * self.variance)


def gfunction_gamma_factor(m: float) -> float:
    """Coefficient-free part of the product model's lower-bound family."""
    return (
        (2.0 * m + 1.0)
        * (1.0 - 4.0 * (1.0 - 0.5 ** (m + 1.0)) / (m + 2.0)) ** 2
        / (m + 1.0) ** 2
    )


def gfunction_reference(a) -> GFunctionReference:
    a = np.asarray(a, dtype=float)
    factors = 1.0 + (1.0 / 3.0) / (1.0 + a) ** 2
    total_product = np.prod(factors)
    variance = total_product - 1.0
    prod_not_i = total_product / factors

    s = (1.0 / 3.0) / (1.0 + a) ** 2 / variance
    s_tot = (1.0 / 3.0) / (1.0 + a) ** 2 * prod_not_i / variance
    nu = 16.0 * prod_not_i / (1.0 + a) ** 2
    sigma_small = nu / 12.0  # the x(1-x)/2 weight integrates to 1/12 here
    ub1 = nu / (PI2 * variance)
    ub2 = sigma_small / variance

    m_star, factor = maximize_gamma(gfunction_gamma_factor, m_range=M_SEARCH_RANGE)
    lb2 = factor / ((1.0 + a) ** 2 * variance)

    return GFunctionReference(
        a=a,
        variance=variance,
        s=s,
        s_tot=s_tot,
        nu=nu,
        sigma_small=sigma_small,
        ub1=ub1,
        ub2=ub2,
        lb1=np.zeros_like(a),
        lb2=lb2,
        m_star=float(m_star),
    )


@dataclass(frozen=True)
class LinearFactorReference:
    """Exact quantities for ``G = a(z) x_i + b(z)`` with unit-uniform inputs,
    for the distinguished input ``x_i``.

    Parameterized by ``int_a = E[a(z)]``, ``int_a2 = E[a(z)^2]`` and the total
    output variance.
    """

    int_a: float
    int_a2: float
    variance: float
    v_tot: float
    s_tot: float
    nu: float
    sigma_small: float
    ub1: float
    ub2: float
    lb1: float  # identically zero for this family
    lb2: float
    lb_star: float
    m_star: float

    def gamma(self, m: float) -> float:
        return linear_factor_gamma_factor(m) * self.int_a**2 / self.variance


def linear_factor_gamma_factor(m: float) -> float:
    """Coefficient-free part of the linear-factor family's lower bounds."""
    return (2.0 * m + 1.0) * m**2 / (4.0 * (m + 2.0) ** 2 * (m + 1.0) ** 2)


def linear_factor_reference(
    int_a: float, int_a2: float, variance: float
) -> LinearFactorReference:
    if int_a2 < int_a**2:
        raise ValueError("int_a2 must be at least int_a^2")
    v_tot = int_a2 / 12.0
    s_tot = v_tot / variance
    nu = int_a2
    sigma_small = int_a2 / 12.0
    m_star, factor = maximize_gamma(linear_factor_gamma_factor, m_range=M_SEARCH_RANGE)
    lb2 = factor * int_a**2 / variance
    return LinearFactorReference(
        int_a=int_a,
        int_a2=int_a2,
        variance=variance,
        v_tot=v_tot,
        s_tot=s_tot,
        nu=nu,
        sigma_small=sigma_small,
        ub1=nu / (PI2 * variance),
        ub2=sigma_small / variance,
        lb1=0.0,
        lb2=lb2,
        lb_star=max(0.0, lb2),
        m_star=float(m_star),
    )
