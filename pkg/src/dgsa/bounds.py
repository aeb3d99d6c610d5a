"""Lower and upper bounds on Sobol' total sensitivity indices computed from
derivative-based measures.

Per input (unit-uniform marginals): two lower bounds — a boundary-difference
bound and the maximum of a weighted-derivative bound family over its exponent
— and two upper bounds, ``nu/(pi^2 V)`` and ``sigma_small/V``. For arbitrary
continuous marginals the spectral-gap constant gives ``C(F) nu / V``; normal
marginals additionally get a mean-derivative lower bound. Group and pair
bounds cover joint effects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .distributions import InputSpace, Normal, poincare_constant
from .errors import ConstantUnavailableError, UnsupportedMeasureError
from .estimators import DgsmEstimates, Pair, estimate_tau
from .functions import GradientSample, ModelFunction

PI2 = math.pi**2

M_SEARCH_RANGE = (0.05, 200.0)
M_SEARCH_GRID = 200
M_SEARCH_TOL = 1e-3


# --- single-value bound formulas ---------------------------------------------


def ub1(nu_i: float, variance: float) -> float:
    """Upper bound ``nu_i / (pi^2 V)`` (unit-uniform marginal)."""
    _require_positive_variance(variance)
    return nu_i / (PI2 * variance)


def ub2(sigma_small_i: float, variance: float) -> float:
    """Upper bound ``sigma_small_i / V`` (unit-uniform marginal)."""
    _require_positive_variance(variance)
    return sigma_small_i / variance


def ub_poincare(nu_i: float, constant: float, variance: float) -> float:
    """General upper bound ``C(F_i) nu_i / V`` for any continuous marginal."""
    _require_positive_variance(variance)
    return constant * nu_i / variance


def normal_lower_bound(w_i: float, mu_i: float, sigma_i: float, variance: float) -> float:
    """Lower bound ``sigma^4 w^2 / ((mu^2 + sigma^2) V)`` for a normal marginal."""
    _require_positive_variance(variance)
    return sigma_i**4 * w_i**2 / ((mu_i**2 + sigma_i**2) * variance)


def lb_star(lb1_value: float, lb2_value: float) -> float:
    """The better of the two lower bounds."""
    return max(lb1_value, lb2_value)


def gamma_value(m: float, boundary_gap: float, w_m_plus_1: float, variance: float) -> float:
    """One member of the lower-bound family.

    ``boundary_gap`` is ``E[G(1,z) - G(x)]`` and ``w_m_plus_1`` the
    ``x^(m+1)``-weighted mean derivative for the same input.
    """
    if not m > 0:
        raise ValueError(f"exponent must be positive, got m={m}")
    _require_positive_variance(variance)
    return (2.0 * m + 1.0) * (boundary_gap - w_m_plus_1) ** 2 / ((m + 1.0) ** 2 * variance)


def theorem1_range(
    c: float, C: float, variance: float, marginal_variance: float
) -> Tuple[float, float]:
    """Envelope bounds ``[sigma_i^2 c^2 / V, sigma_i^2 C^2 / V]`` from a
    user-supplied derivative-magnitude envelope ``c <= |dG/dx_i| <= C``.

    For a unit-uniform marginal ``sigma_i^2 = 1/12``, giving the classical
    ``[c^2/(12V), C^2/(12V)]`` form.
    """
    if c < 0 or C < 0 or c > C:
        raise ValueError(f"envelope must satisfy 0 <= c <= C, got c={c}, C={C}")
    _require_positive_variance(variance)
    return (
        marginal_variance * c**2 / variance,
        marginal_variance * C**2 / variance,
    )


def superset_ub(nu_ij: float, constant_i: float, constant_j: float, variance: float) -> float:
    """Pair bound ``C(F_i) C(F_j) nu_ij / V`` on the superset importance."""
    _require_positive_variance(variance)
    return constant_i * constant_j * nu_ij / variance


def _require_positive_variance(variance: float) -> None:
    if not variance > 0:
        raise ValueError(f"variance must be positive, got {variance}")


# --- exponent search ------------------------------------------------------------


def maximize_gamma(
    curve: Callable[[float], float],
    m_range: Tuple[float, float] = M_SEARCH_RANGE,
    grid: int = M_SEARCH_GRID,
    tol: float = M_SEARCH_TOL,
) -> Tuple[Optional[float], float]:
    """Maximize a lower-bound family over its exponent.

    Log-spaced grid scan followed by golden-section refinement of the best
    bracket. Returns ``(m_star, value)``; an everywhere-nonpositive curve has
    no useful maximum and yields ``(None, 0.0)``.
    """
    lo, hi = m_range
    ms = np.geomspace(lo, hi, grid)
    vals = np.array([curve(m) for m in ms])
    if not np.any(vals > 0.0):
        return None, 0.0
    k = int(np.argmax(vals))
    a = ms[max(0, k - 1)]
    b = ms[min(grid - 1, k + 1)]

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = curve(c), curve(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = curve(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = curve(d)
    m_star = 0.5 * (a + b)
    return float(m_star), float(curve(m_star))


# --- empirical pipeline ----------------------------------------------------------


@dataclass(frozen=True)
class GroupBoundResult:
    group: Tuple[int, ...]
    tau: float
    tau_se: float
    ub: float
    exact_if_linear: float  # tau_y / V; equals S_y^tot when G is linear in the group
    kind: str  # "uniform" or "normal"


def group_bound(
    tau_y: float, variance: float, space: InputSpace, group: Sequence[int]
) -> Tuple[float, float]:
    """Group upper bound and the linear-case exact value ``tau_y / V``.

    Unit-uniform groups use ``24 tau / (pi^2 V)``, normal groups ``2 tau / V``;
    mixed-kind groups are not supported.
    """
    if len(group) == 0:
        return 0.0, 0.0
    _require_positive_variance(variance)
    if all(space.is_unit_uniform(i) for i in group):
        return 24.0 * tau_y / (PI2 * variance), tau_y / variance
    if all(isinstance(space.marginals[i], Normal) for i in group):
        return 2.0 * tau_y / variance, tau_y / variance
    raise UnsupportedMeasureError(
        "group bounds need all members unit-uniform or all members normal"
    )


@dataclass(frozen=True)
class BoundsReport:
    """Per-input, per-group and per-pair bounds from one gradient sample.

    Entries are NaN where the marginal kind does not support the bound. When
    the sample variance of the model output is zero everything is degenerate
    and reported as such instead of raising.
    """

    variance: float
    mean: float
    degenerate: bool
    lb1: np.ndarray
    lb2: np.ndarray
    m_star: np.ndarray
    lb_star: np.ndarray
    ub1_values: np.ndarray
    ub2_values: np.ndarray
    ub_poincare_values: np.ndarray
    normal_lb: np.ndarray
    nu_degenerate: np.ndarray  # inputs whose mean squared derivative is zero
    derivative_sup: np.ndarray  # labeled heuristic: max |dG/dx_i| over the design
    theorem1_lower: Optional[np.ndarray]
    theorem1_upper: Optional[np.ndarray]
    groups: List[GroupBoundResult] = field(default_factory=list)
    superset: Dict[Pair, float] = field(default_factory=dict)
    crossed_nu: Dict[Pair, Tuple[float, float]] = field(default_factory=dict)
    ledger_snapshot: Tuple[int, int] = (0, 0)


def bounds_report(
    f: ModelFunction,
    space: InputSpace,
    sample: GradientSample,
    dgsm: DgsmEstimates,
    envelope: Optional[Tuple[float, float]] = None,
    groups: Sequence[Sequence[int]] = (),
    crossed_nu: Optional[Dict[Pair, Tuple[float, float]]] = None,
    m_range: Tuple[float, float] = M_SEARCH_RANGE,
) -> BoundsReport:
    """Compute every applicable bound from a gradient sample.

    Boundary evaluations ``G(x_i -> 0, z)`` and ``G(x_i -> 1, z)`` are made for
    each unit-uniform axis (2n model evaluations per axis), which is what the
    two lower bounds need on top of the gradient sample. The output variance is
    estimated from the base values of the same sample, so an all-uniform run
    costs exactly ``n (3d + 1)`` evaluations including the finite-difference
    gradients.
    """
    n, d = sample.n, sample.d
    points = sample.points
    values = sample.values
    if values is None:
        values = f.evaluate_batch(points)

    variance = float(values.var(ddof=1)) if n > 1 else 0.0
    mean = float(values.mean()) if n else math.nan

    nan = np.full(d, np.nan)
    if not variance > 0:
        return BoundsReport(
            variance=variance,
            mean=mean,
            degenerate=True,
            lb1=np.zeros(d),
            lb2=np.zeros(d),
            m_star=nan.copy(),
            lb_star=np.zeros(d),
            ub1_values=nan.copy(),
            ub2_values=nan.copy(),
            ub_poincare_values=nan.copy(),
            normal_lb=nan.copy(),
            nu_degenerate=dgsm.nu == 0.0,
            derivative_sup=np.abs(sample.grads).max(axis=0) if n else nan.copy(),
            theorem1_lower=None,
            theorem1_upper=None,
            ledger_snapshot=f.ledger.snapshot(),
        )

    lb1 = np.full(d, np.nan)
    lb2 = np.full(d, np.nan)
    m_star = np.full(d, np.nan)
    lb_star_values = np.full(d, np.nan)
    ub1_values = np.full(d, np.nan)
    ub2_values = np.full(d, np.nan)
    poincare_values = np.full(d, np.nan)
    normal_lb_values = np.full(d, np.nan)
    nu_degenerate = np.zeros(d, dtype=bool)

    for i in range(d):
        marginal = space.marginals[i]
        try:
            constant = poincare_constant(marginal)
        except ConstantUnavailableError:
            constant = None
        if constant is not None:
            poincare_values[i] = ub_poincare(float(dgsm.nu[i]), constant, variance)
        if isinstance(marginal, Normal):
            normal_lb_values[i] = normal_lower_bound(
                float(dgsm.w[i]), marginal.mu, marginal.sigma, variance
            )
        if not space.is_unit_uniform(i):
            continue

        ub1_values[i] = ub1(float(dgsm.nu[i]), variance)
        if dgsm.sigma_small is not None:
            ub2_values[i] = ub2(float(dgsm.sigma_small[i]), variance)

        # boundary evaluations shared by both lower bounds
        at_zero = points.copy()
        at_zero[:, i] = 0.0
        at_one = points.copy()
        at_one[:, i] = 1.0
        g0_vals = f.evaluate_batch(at_zero)
        g1_vals = f.evaluate_batch(at_one)

        nu_i = float(dgsm.nu[i])
        if nu_i == 0.0:
            nu_degenerate[i] = True
            lb1[i] = 0.0
        else:
            numerator = float(np.mean((g1_vals - g0_vals) * (g1_vals + g0_vals - 2.0 * values)))
            lb1[i] = numerator**2 / (4.0 * nu_i * variance)

        boundary_gap = float(np.mean(g1_vals - values))
        x_i = points[:, i]
        grad_i = sample.grads[:, i]

        def curve(m: float) -> float:
            w_m1 = float(np.mean(x_i ** (m + 1.0) * grad_i))
            return gamma_value(m, boundary_gap, w_m1, variance)

        m_best, lb2_val = maximize_gamma(curve, m_range=m_range)
        lb2[i] = lb2_val
        m_star[i] = math.nan if m_best is None else m_best
        lb_star_values[i] = lb_star(lb1[i], lb2[i])

    theorem1_lower = theorem1_upper = None
    if envelope is not None:
        c, C = envelope
        theorem1_lower = np.empty(d)
        theorem1_upper = np.empty(d)
        for i in range(d):
            theorem1_lower[i], theorem1_upper[i] = theorem1_range(
                c, C, variance, space.marginals[i].variance()
            )

    group_results: List[GroupBoundResult] = []
    for group in groups:
        group = tuple(int(i) for i in group)
        tau_y, tau_se = estimate_tau(sample, group, space)
        kind = "uniform" if all(space.is_unit_uniform(i) for i in group) else "normal"
        ub_y, exact = group_bound(tau_y, variance, space, group)
        group_results.append(GroupBoundResult(group, tau_y, tau_se, ub_y, exact, kind))

    superset: Dict[Pair, float] = {}
    if crossed_nu:
        for (i, j), (nu_ij, _se) in crossed_nu.items():
            try:
                c_i = poincare_constant(space.marginals[i])
                c_j = poincare_constant(space.marginals[j])
            except ConstantUnavailableError:
                continue
            superset[(i, j)] = superset_ub(nu_ij, c_i, c_j, variance)

    return BoundsReport(
        variance=variance,
        mean=mean,
        degenerate=False,
        lb1=lb1,
        lb2=lb2,
        m_star=m_star,
        lb_star=lb_star_values,
        ub1_values=ub1_values,
        ub2_values=ub2_values,
        ub_poincare_values=poincare_values,
        normal_lb=normal_lb_values,
        nu_degenerate=nu_degenerate,
        derivative_sup=np.abs(sample.grads).max(axis=0),
        theorem1_lower=theorem1_lower,
        theorem1_upper=theorem1_upper,
        groups=group_results,
        superset=superset,
        crossed_nu=dict(crossed_nu or {}),
        ledger_snapshot=f.ledger.snapshot(),
    )
