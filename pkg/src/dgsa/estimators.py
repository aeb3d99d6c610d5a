"""Sample-based estimators for derivative measures, variance-based indices and
screening measures.

Plain-mean estimators report the classical standard error ``std / sqrt(n)``;
ratio statistics (Sobol' indices) report a 10-batch-means standard error.
Every estimator's evaluation cost is exact and assertable from the model's
ledger.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .distributions import InputSpace, Normal
from .errors import DegenerateVarianceError, UnsupportedMeasureError
from .functions import GradientSample, ModelFunction
from .sampling import MorrisDesign, PickFreezeDesign, morris_points

N_BATCHES = 10

Pair = Tuple[int, int]


def _mean_se(samples: np.ndarray, axis: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    n = samples.shape[axis]
    if n < 1:
        raise ValueError("empty sample")
    mean = samples.mean(axis=axis)
    if n == 1:
        return mean, np.full_like(np.atleast_1d(mean), np.nan)
    se = samples.std(axis=axis, ddof=1) / np.sqrt(n)
    return mean, se


def _batch_se(rows: int, statistic) -> float:
    """Standard error of a ratio statistic from consecutive-batch recomputation."""
    n_batches = min(N_BATCHES, rows // 2)
    if n_batches < 2:
        return float("nan")
    values = []
    for chunk in np.array_split(np.arange(rows), n_batches):
        values.append(statistic(chunk))
    return float(np.std(values, ddof=1) / np.sqrt(n_batches))


def _require_rows(sample: GradientSample, minimum: int = 2) -> None:
    if sample.n < minimum:
        raise ValueError(f"estimator needs at least {minimum} gradient rows, got {sample.n}")


def _require_unit_uniform(space: InputSpace, i: int, measure: str) -> None:
    if not space.is_unit_uniform(i):
        raise UnsupportedMeasureError(
            f"{measure} is defined for Uniform(0,1) marginals only; "
            f"axis {i + 1} is {space.marginals[i].kind}"
        )


def estimate_nu(sample: GradientSample) -> Tuple[np.ndarray, np.ndarray]:
    """Mean squared partial derivative per input."""
    _require_rows(sample)
    return _mean_se(sample.grads**2)


def estimate_w(sample: GradientSample) -> Tuple[np.ndarray, np.ndarray]:
    """Mean partial derivative per input (any marginals)."""
    _require_rows(sample)
    return _mean_se(sample.grads)


def estimate_w_m(
    sample: GradientSample, m: float, space: InputSpace
) -> Tuple[np.ndarray, np.ndarray]:
    """Weighted mean ``E[x_i^m dG/dx_i]`` on the unit cube."""
    if not m > 0:
        raise ValueError(f"weight exponent must be positive, got m={m}")
    _require_rows(sample)
    for i in range(sample.d):
        _require_unit_uniform(space, i, "the x^m-weighted derivative measure")
    return _mean_se(sample.points**m * sample.grads)


def estimate_sigma_small(
    sample: GradientSample, space: InputSpace
) -> Tuple[np.ndarray, np.ndarray]:
    """Mean of ``x(1-x)/2 * (dG/dx_i)^2`` per input (unit-uniform marginals)."""
    _require_rows(sample)
    for i in range(sample.d):
        _require_unit_uniform(space, i, "the boundary-damped derivative measure")
    x = sample.points
    return _mean_se(0.5 * x * (1.0 - x) * sample.grads**2)


def _tau_weight(space: InputSpace, i: int, x: np.ndarray) -> np.ndarray:
    marginal = space.marginals[i]
    if space.is_unit_uniform(i):
        return (1.0 - 3.0 * x + 3.0 * x**2) / 6.0
    if isinstance(marginal, Normal):
        return ((x - marginal.mu) ** 2 + marginal.sigma**2) / 4.0
    raise UnsupportedMeasureError(
        f"the tau measure needs Uniform(0,1) or normal marginals; "
        f"axis {i + 1} is {marginal.kind}"
    )


def estimate_tau(
    sample: GradientSample, group: Sequence[int], space: InputSpace
) -> Tuple[float, float]:
    """Group measure: sum over members of the weighted mean squared partial.

    Uniform members use the ``(1 - 3x + 3x^2)/6`` weight, normal members the
    ``((x - mu)^2 + sigma^2)/4`` weight; kinds may be mixed across members.
    """
    _require_rows(sample)
    if len(group) == 0:
        return 0.0, 0.0
    contrib = np.zeros(sample.n)
    for i in group:
        x = sample.points[:, i]
        contrib += _tau_weight(space, i, x) * sample.grads[:, i] ** 2
    mean, se = _mean_se(contrib)
    return float(mean), float(se)


def estimate_tau_per_input(
    sample: GradientSample, space: InputSpace
) -> Tuple[np.ndarray, np.ndarray]:
    values = np.empty(sample.d)
    ses = np.empty(sample.d)
    for i in range(sample.d):
        values[i], ses[i] = estimate_tau(sample, [i], space)
    return values, ses


def estimate_mu_star_integral(sample: GradientSample) -> Tuple[np.ndarray, np.ndarray]:
    """Mean absolute partial derivative per input."""
    _require_rows(sample)
    return _mean_se(np.abs(sample.grads))


@dataclass(frozen=True)
class DgsmEstimates:
    """All derivative-based measures from one gradient sample."""

    nu: np.ndarray
    nu_se: np.ndarray
    w: np.ndarray
    w_se: np.ndarray
    w_m: Dict[float, np.ndarray]
    w_m_se: Dict[float, np.ndarray]
    sigma_small: Optional[np.ndarray]
    sigma_small_se: Optional[np.ndarray]
    tau: Optional[np.ndarray]
    tau_se: Optional[np.ndarray]
    mu_star: np.ndarray
    mu_star_se: np.ndarray
    n: int
    ledger_snapshot: Tuple[int, int]


def dgsm_estimates(
    sample: GradientSample,
    space: InputSpace,
    m_values: Iterable[float] = (),
) -> DgsmEstimates:
    """Bundle every applicable derivative measure.

    Measures defined only for particular marginal kinds are reported as None
    when the space does not qualify, rather than failing the whole bundle.
    """
    nu, nu_se = estimate_nu(sample)
    w, w_se = estimate_w(sample)
    mu_star, mu_star_se = estimate_mu_star_integral(sample)

    all_unit_uniform = all(space.is_unit_uniform(i) for i in range(space.dimension))
    sigma_small = sigma_small_se = None
    if all_unit_uniform:
        sigma_small, sigma_small_se = estimate_sigma_small(sample, space)

    tau = tau_se = None
    try:
        tau, tau_se = estimate_tau_per_input(sample, space)
    except UnsupportedMeasureError:
        pass

    w_m: Dict[float, np.ndarray] = {}
    w_m_se: Dict[float, np.ndarray] = {}
    if all_unit_uniform:
        for m in m_values:
            w_m[m], w_m_se[m] = estimate_w_m(sample, m, space)

    return DgsmEstimates(
        nu=nu,
        nu_se=nu_se,
        w=w,
        w_se=w_se,
        w_m=w_m,
        w_m_se=w_m_se,
        sigma_small=sigma_small,
        sigma_small_se=sigma_small_se,
        tau=tau,
        tau_se=tau_se,
        mu_star=mu_star,
        mu_star_se=mu_star_se,
        n=sample.n,
        ledger_snapshot=sample.ledger_snapshot,
    )


# --- variance-based indices ---------------------------------------------------


class PickFreezeEvaluator:
    """Caches model outputs on the pick-freeze matrices.

    A and the d column-swapped matrices cost ``n (d + 1)`` evaluations; B adds
    ``n`` more only when first-order indices are requested; each pair swap adds
    ``n`` on demand.
    """

    def __init__(self, f: ModelFunction, design: PickFreezeDesign):
        self.f = f
        self.design = design
        self._a: Optional[np.ndarray] = None
        self._b: Optional[np.ndarray] = None
        self._swapped: Dict[int, np.ndarray] = {}
        self._swapped_pairs: Dict[Pair, np.ndarray] = {}

    def values_a(self) -> np.ndarray:
        if self._a is None:
            self._a = self.f.evaluate_batch(self.design.a)
        return self._a

    def values_b(self) -> np.ndarray:
        if self._b is None:
            self._b = self.f.evaluate_batch(self.design.b)
        return self._b

    def values_swapped(self, i: int) -> np.ndarray:
        if i not in self._swapped:
            self._swapped[i] = self.f.evaluate_batch(self.design.swapped(i))
        return self._swapped[i]

    def values_swapped_pair(self, i: int, j: int) -> np.ndarray:
        key = (min(i, j), max(i, j))
        if key not in self._swapped_pairs:
            self._swapped_pairs[key] = self.f.evaluate_batch(self.design.swapped_pair(*key))
        return self._swapped_pairs[key]


@dataclass(frozen=True)
class SobolEstimates:
    """First-order and total indices with batch standard errors.

    Values are raw Monte Carlo estimates; they may leave ``[0, 1]`` by noise
    and are deliberately not clamped.
    """

    variance: float
    mean: float
    s: Optional[np.ndarray]
    s_se: Optional[np.ndarray]
    s_tot: np.ndarray
    s_tot_se: np.ndarray
    n: int
    ledger_snapshot: Tuple[int, int]


def estimate_sobol(
    f: ModelFunction,
    design: PickFreezeDesign,
    first_order: bool = True,
    evaluator: Optional[PickFreezeEvaluator] = None,
) -> SobolEstimates:
    """Total indices by the squared-difference (Jansen) formula; first-order
    indices by the pick-freeze covariance estimator.

    The output variance and mean pool all A and B evaluations (A only in
    totals-only mode). A zero variance raises
    :class:`~dgsa.errors.DegenerateVarianceError`.
    """
    n, d = design.n, design.d
    if n < 2:
        raise ValueError("pick-freeze estimation needs n >= 2")
    ev = evaluator or PickFreezeEvaluator(f, design)
    va = ev.values_a()
    swapped = [ev.values_swapped(i) for i in range(d)]
    vb = ev.values_b() if first_order else None

    def stats(rows: np.ndarray) -> Tuple[float, float, np.ndarray, Optional[np.ndarray]]:
        pool = va[rows] if vb is None else np.concatenate([va[rows], vb[rows]])
        g0 = float(pool.mean())
        variance = float(pool.var(ddof=1))
        s_tot = np.array(
            [0.5 * np.mean((va[rows] - vi[rows]) ** 2) / variance for vi in swapped]
        )
        s = None
        if vb is not None:
            # covariance of G(B) with G(A_B_i); G(A) acts as a per-sample
            # control variate for the squared-mean term, which keeps small
            # indices resolvable under quasi-Monte Carlo sampling
            s = np.array(
                [np.mean(vb[rows] * (vi[rows] - va[rows])) / variance for vi in swapped]
            )
        return g0, variance, s_tot, s

    all_rows = np.arange(n)
    pool = va if vb is None else np.concatenate([va, vb])
    if not pool.var(ddof=1) > 0:
        raise DegenerateVarianceError(
            "model output variance is zero; sensitivity indices are undefined"
        )
    g0, variance, s_tot, s = stats(all_rows)

    s_tot_se = np.array([_batch_se(n, lambda rows, k=k: stats(rows)[2][k]) for k in range(d)])
    s_se = None
    if first_order:
        s_se = np.array([_batch_se(n, lambda rows, k=k: stats(rows)[3][k]) for k in range(d)])

    return SobolEstimates(
        variance=variance,
        mean=g0,
        s=s,
        s_se=s_se,
        s_tot=s_tot,
        s_tot_se=s_tot_se,
        n=n,
        ledger_snapshot=f.ledger.snapshot(),
    )


def estimate_superset(
    f: ModelFunction,
    design: PickFreezeDesign,
    pairs: Sequence[Pair],
    evaluator: Optional[PickFreezeEvaluator] = None,
) -> Dict[Pair, Tuple[float, float]]:
    """Variance of all interaction terms containing both pair members.

    Four-point estimator ``mean([G(A) - G(A_B_i) - G(A_B_j) + G(A_B_ij)]^2)/4``
    per pair, each pair adding ``n`` evaluations for the double swap.
    """
    ev = evaluator or PickFreezeEvaluator(f, design)
    va = ev.values_a()
    out: Dict[Pair, Tuple[float, float]] = {}
    for i, j in pairs:
        diff = va - ev.values_swapped(i) - ev.values_swapped(j) + ev.values_swapped_pair(i, j)
        mean, se = _mean_se(0.25 * diff**2)
        out[(min(i, j), max(i, j))] = (float(mean), float(se))
    return out


# --- crossed second-derivative measure ----------------------------------------

DEFAULT_CROSSED_DELTA = 1e-4


def estimate_nu_crossed(
    f: ModelFunction,
    points: np.ndarray,
    bounds: Sequence[Tuple[float, float]],
    delta: float = DEFAULT_CROSSED_DELTA,
    pairs: Optional[Sequence[Pair]] = None,
) -> Dict[Pair, Tuple[float, float]]:
    """Mean squared mixed second derivative per input pair, by nested forward
    differences.

    The step is larger than the first-order default to keep the second
    difference above roundoff. Steps reverse direction at the support boundary
    exactly as first-order differences do. Cost with base reuse:
    ``n (1 + d + #pairs)`` evaluations.
    """
    if not delta > 0:
        raise ValueError(f"finite-difference step must be positive, got {delta}")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = points.shape
    if pairs is None:
        pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    for i, j in pairs:
        if not (0 <= i < d and 0 <= j < d and i != j):
            raise ValueError(f"pair ({i}, {j}) out of range for dimension {d}")

    base = f.evaluate_batch(points)
    directions = np.empty((n, d))
    singles: Dict[int, np.ndarray] = {}
    axes = sorted({k for pair in pairs for k in pair})
    for k in axes:
        _, hi = bounds[k]
        directions[:, k] = np.where(points[:, k] + delta <= hi, 1.0, -1.0)
        shifted = points.copy()
        shifted[:, k] += directions[:, k] * delta
        singles[k] = f.evaluate_batch(shifted)

    out: Dict[Pair, Tuple[float, float]] = {}
    for i, j in pairs:
        shifted = points.copy()
        shifted[:, i] += directions[:, i] * delta
        shifted[:, j] += directions[:, j] * delta
        both = f.evaluate_batch(shifted)
        cross = (both - singles[i] - singles[j] + base) * directions[:, i] * directions[:, j]
        cross /= delta**2
        mean, se = _mean_se(cross**2)
        out[(min(i, j), max(i, j))] = (float(mean), float(se))
    return out


# --- screening measures ---------------------------------------------------------


@dataclass(frozen=True)
class MorrisMeasures:
    """Mean, absolute-mean and spread of the elementary effects per input."""

    mu: np.ndarray
    mu_star: np.ndarray
    sigma: np.ndarray
    r: int
    ledger_snapshot: Tuple[int, int]


def morris_measures(f: ModelFunction, space: InputSpace, design: MorrisDesign) -> MorrisMeasures:
    """Elementary-effect statistics over the trajectories (``r (d + 1)``
    evaluations)."""
    if design.r < 2:
        raise ValueError("the effect spread needs at least 2 trajectories")
    pts = morris_points(space, design)
    r, steps, d = design.r, design.d, design.d
    values = f.evaluate_batch(pts.reshape(-1, d)).reshape(r, steps + 1)

    effects = np.empty((r, d))
    for t in range(r):
        for k in range(steps):
            axis = design.axes[t, k]
            effects[t, axis] = (values[t, k + 1] - values[t, k]) / design.signed_deltas[t, k]

    return MorrisMeasures(
        mu=effects.mean(axis=0),
        mu_star=np.abs(effects).mean(axis=0),
        sigma=effects.std(axis=0, ddof=1),
        r=r,
        ledger_snapshot=f.ledger.snapshot(),
    )
