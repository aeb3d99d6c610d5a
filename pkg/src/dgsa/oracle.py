"""Deterministic tensor-grid quadrature reference for low-dimensional models.

Computes the output variance, first-order and total variance shares, all
derivative-based measures, and pair interaction/superset variances by
Gauss-Legendre quadrature mapped through the marginal quantiles. Used to
validate the sampling estimators and to freeze reference constants in tests.

Models may declare per-axis derivative kinks (``ModelFunction.breakpoints``);
those axes switch to piecewise Gauss-Legendre panels split at the kinks, which
keeps spectral accuracy for the smooth pieces.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .distributions import InputSpace, Normal
from .errors import UnsupportedMeasureError
from .estimators import Pair
from .functions import ModelFunction

MAX_DIMENSION = 4
DEFAULT_ORDER = 32
GRADIENT_FD_DELTA = 1e-6


class PrecisionWarning(UserWarning):
    """Raised when two quadrature orders disagree beyond the advertised accuracy."""


@dataclass(frozen=True)
class QuadratureRule:
    """Per-axis unit-interval nodes and probability weights (weights sum to 1)."""

    nodes: Tuple[np.ndarray, ...]
    weights: Tuple[np.ndarray, ...]

    @property
    def dimension(self) -> int:
        return len(self.nodes)


def _panel(lo: float, hi: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return lo + (hi - lo) * (x + 1.0) / 2.0, (hi - lo) * w / 2.0


def make_rule(
    d: int,
    order: int = DEFAULT_ORDER,
    breakpoints: Optional[Sequence[Sequence[float]]] = None,
) -> QuadratureRule:
    """Unit-cube tensor rule of the given per-axis order.

    Axes with breakpoints are split into panels at each interior kink; the
    per-axis node budget is divided across panels (at least 4 nodes each).
    """
    if not 1 <= d <= MAX_DIMENSION:
        raise ValueError(f"quadrature reference supports 1 <= d <= {MAX_DIMENSION}, got {d}")
    if order < 2:
        raise ValueError("quadrature order must be at least 2")
    nodes = []
    weights = []
    for i in range(d):
        cuts = sorted(b for b in (breakpoints[i] if breakpoints else ()) if 0.0 < b < 1.0)
        edges = [0.0, *cuts, 1.0]
        per_panel = max(4, order // (len(edges) - 1))
        xs, ws = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            x, w = _panel(lo, hi, per_panel)
            xs.append(x)
            ws.append(w)
        nodes.append(np.concatenate(xs))
        weights.append(np.concatenate(ws))
    return QuadratureRule(tuple(nodes), tuple(weights))


def _rule_for(f: ModelFunction, order: int) -> QuadratureRule:
    return make_rule(f.dimension, order, f.breakpoints)


class _TensorGrid:
    """Model values on the full tensor grid plus marginalization helpers."""

    def __init__(self, f: ModelFunction, space: InputSpace, rule: QuadratureRule):
        if space.dimension != rule.dimension or f.dimension != rule.dimension:
            raise ValueError("model, space and rule dimensions must agree")
        self.rule = rule
        self.d = rule.dimension
        # input-space coordinates per axis via the marginal quantiles
        self.axis_points = tuple(
            np.asarray(m.quantile(rule.nodes[i])) for i, m in enumerate(space.marginals)
        )
        mesh = np.meshgrid(*self.axis_points, indexing="ij")
        self.shape = mesh[0].shape
        self.points = np.column_stack([g.ravel() for g in mesh])
        self.tensor = f.evaluate_batch(self.points).reshape(self.shape)
        self.g0 = self.expect(self.tensor)
        self.variance = self.expect((self.tensor - self.g0) ** 2)

    def expect(self, tensor: np.ndarray) -> float:
        """Full expectation of a tensor-shaped field."""
        out = tensor
        for axis in range(self.d - 1, -1, -1):
            out = np.tensordot(out, self.rule.weights[axis], axes=([axis], [0]))
        return float(out)

    def mean_over(self, tensor: np.ndarray, axes: Iterable[int]) -> np.ndarray:
        """Partial expectation over the given axes (kept as size-1 dims)."""
        out = tensor
        for axis in sorted(axes):
            w = self.rule.weights[axis].reshape(
                [-1 if k == axis else 1 for k in range(self.d)]
            )
            out = (out * w).sum(axis=axis, keepdims=True)
        return out

    def closed_variance(self, subset: Sequence[int]) -> float:
        """Variance of the conditional mean given the subset coordinates."""
        others = [k for k in range(self.d) if k not in subset]
        cond_mean = self.mean_over(self.tensor, others)
        return self.expect(np.broadcast_to(cond_mean - self.g0, self.shape) ** 2)


@dataclass(frozen=True)
class OracleAnova:
    g0: float
    variance: float
    v_first: np.ndarray
    v_tot: np.ndarray
    s_first: np.ndarray
    s_tot: np.ndarray


def anova_totals(
    f: ModelFunction,
    space: InputSpace,
    order: int = DEFAULT_ORDER,
    check: bool = True,
) -> OracleAnova:
    """Variance decomposition totals by tensor quadrature.

    With ``check`` the variance is recomputed at a lower order; a relative
    disagreement beyond 1e-8 emits a :class:`PrecisionWarning`.
    """
    grid = _TensorGrid(f, space, _rule_for(f, order))
    if check and order > 8:
        coarse = _TensorGrid(f, space, _rule_for(f, order - 8))
        # relative agreement with an absolute floor at roundoff scale
        tol = 1e-8 * max(abs(grid.variance), abs(coarse.variance)) + 1e-14 * (
            1.0 + grid.g0**2
        )
        if abs(grid.variance - coarse.variance) > tol:
            warnings.warn(
                f"quadrature variance moved by more than 1e-8 between orders "
                f"{order - 8} and {order}; results may be inaccurate",
                PrecisionWarning,
                stacklevel=2,
            )

    d = grid.d
    v_first = np.empty(d)
    v_tot = np.empty(d)
    for i in range(d):
        cond = grid.mean_over(grid.tensor, [k for k in range(d) if k != i])
        v_first[i] = grid.expect(np.broadcast_to(cond - grid.g0, grid.shape) ** 2)
        residual = grid.tensor - grid.mean_over(grid.tensor, [i])
        v_tot[i] = grid.expect(residual**2)

    if grid.variance > 0:
        s_first = v_first / grid.variance
        s_tot = v_tot / grid.variance
    else:
        s_first = np.full(d, np.nan)
        s_tot = np.full(d, np.nan)
    return OracleAnova(grid.g0, grid.variance, v_first, v_tot, s_first, s_tot)


def pair_measures(
    f: ModelFunction,
    space: InputSpace,
    pairs: Optional[Sequence[Pair]] = None,
    order: int = DEFAULT_ORDER,
) -> Dict[Pair, Tuple[float, float]]:
    """Pair interaction variance and superset importance, ``{(i, j): (V_ij,
    V_ij_super)}``.

    The superset importance is assembled from closed (conditional-mean)
    variances: ``V - W(-i) - W(-j) + W(-ij)``.
    """
    grid = _TensorGrid(f, space, _rule_for(f, order))
    d = grid.d
    if pairs is None:
        pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    v_single = {i: grid.closed_variance([i]) for i in range(d)}
    out: Dict[Pair, Tuple[float, float]] = {}
    for i, j in pairs:
        i, j = min(i, j), max(i, j)
        v_ij = grid.closed_variance([i, j]) - v_single[i] - v_single[j]
        without_i = grid.closed_variance([k for k in range(d) if k != i])
        without_j = grid.closed_variance([k for k in range(d) if k != j])
        without_ij = grid.closed_variance([k for k in range(d) if k not in (i, j)])
        super_ij = grid.variance - without_i - without_j + without_ij
        out[(i, j)] = (v_ij, super_ij)
    return out


@dataclass(frozen=True)
class DgsmExact:
    nu: np.ndarray
    w: np.ndarray
    w_m: Dict[float, np.ndarray]
    sigma_small: Optional[np.ndarray]
    tau: Optional[np.ndarray]
    mu_star: np.ndarray
    nu_crossed: Dict[Pair, float]


def dgsm_exact(
    f: ModelFunction,
    space: InputSpace,
    m_values: Iterable[float] = (),
    pairs: Optional[Sequence[Pair]] = None,
    order: int = DEFAULT_ORDER,
) -> DgsmExact:
    """Quadrature values of every derivative-based measure.

    Needs an analytic gradient. Mixed second derivatives come from a forward
    difference of the gradient with a small step.
    """
    if not f.has_analytic_gradient:
        raise ValueError(f"model '{f.name}' has no analytic gradient; no exact measures")
    rule = _rule_for(f, order)
    grid = _TensorGrid(f, space, rule)
    d = grid.d
    grads = f.gradients_batch(grid.points)

    def per_axis_expect(field: np.ndarray) -> np.ndarray:
        return np.array([grid.expect(field[:, i].reshape(grid.shape)) for i in range(d)])

    nu = per_axis_expect(grads**2)
    w = per_axis_expect(grads)
    mu_star = per_axis_expect(np.abs(grads))

    all_unit_uniform = all(space.is_unit_uniform(i) for i in range(d))
    sigma_small = None
    if all_unit_uniform:
        x = grid.points
        sigma_small = per_axis_expect(0.5 * x * (1.0 - x) * grads**2)

    tau = None
    try:
        tau = np.empty(d)
        for i in range(d):
            marginal = space.marginals[i]
            x_i = grid.points[:, i]
            if space.is_unit_uniform(i):
                weight = (1.0 - 3.0 * x_i + 3.0 * x_i**2) / 6.0
            elif isinstance(marginal, Normal):
                weight = ((x_i - marginal.mu) ** 2 + marginal.sigma**2) / 4.0
            else:
                raise UnsupportedMeasureError(marginal.kind)
            tau[i] = grid.expect((weight * grads[:, i] ** 2).reshape(grid.shape))
    except UnsupportedMeasureError:
        tau = None

    w_m: Dict[float, np.ndarray] = {}
    if all_unit_uniform:
        for m in m_values:
            w_m[m] = per_axis_expect(grid.points**m * grads)

    nu_crossed: Dict[Pair, float] = {}
    if pairs is None:
        pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    for i, j in pairs:
        i, j = min(i, j), max(i, j)
        shifted = grid.points.copy()
        shifted[:, i] += GRADIENT_FD_DELTA
        cross = (f.gradients_batch(shifted)[:, j] - grads[:, j]) / GRADIENT_FD_DELTA
        nu_crossed[(i, j)] = grid.expect((cross**2).reshape(grid.shape))

    return DgsmExact(
        nu=nu,
        w=w,
        w_m=w_m,
        sigma_small=sigma_small,
        tau=tau,
        mu_star=mu_star,
        nu_crossed=nu_crossed,
    )
