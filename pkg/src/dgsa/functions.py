"""Model functions, built-in test models, gradients, and evaluation accounting.

A :class:`ModelFunction` wraps a deterministic map from a d-vector to a scalar.
Evaluations and analytic-gradient calls are charged to a thread-safe
:class:`CostLedger`; finite-difference gradients are charged as the model
evaluations they consume, so ledger counts are exact and assertable.
"""

from __future__ import annotations

import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

DEFAULT_FD_DELTA = 1e-5


class CostLedger:
    """Monotone counters of model work. Never reset implicitly."""

    def __init__(self):
        self._lock = threading.Lock()
        self._model_evals = 0
        self._gradient_evals = 0

    @property
    def model_evals(self) -> int:
        return self._model_evals

    @property
    def gradient_evals(self) -> int:
        """Analytic gradient calls. Finite-difference gradients appear under
        ``model_evals`` instead."""
        return self._gradient_evals

    def charge_model(self, n: int) -> None:
        with self._lock:
            self._model_evals += int(n)

    def charge_gradient(self, n: int) -> None:
        with self._lock:
            self._gradient_evals += int(n)

    def snapshot(self) -> Tuple[int, int]:
        with self._lock:
            return (self._model_evals, self._gradient_evals)


def _max_workers() -> int:
    raw = os.environ.get("SA_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass
class ModelFunction:
    """Deterministic scalar model with optional analytic gradient.

    ``batch`` maps an ``(n, d)`` array to ``(n,)`` outputs; ``gradient_batch``
    maps ``(n, d)`` to ``(n, d)`` partials. ``breakpoints`` lists per-axis
    derivative kinks for kink-aware quadrature references. Models constructed
    from plain per-point callables are evaluated row by row, optionally across
    ``SA_THREADS`` workers when ``parallel_safe``.
    """

    name: str
    dimension: int
    batch: Callable[[np.ndarray], np.ndarray]
    gradient_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    breakpoints: Optional[Tuple[Tuple[float, ...], ...]] = None
    parallel_safe: bool = True
    ledger: CostLedger = field(default_factory=CostLedger)

    def _check_points(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dimension:
            raise ValueError(
                f"model '{self.name}' has dimension {self.dimension}, got points with {x.shape[1]}"
            )
        return x

    def evaluate(self, x) -> float:
        return float(self.evaluate_batch(np.atleast_2d(x))[0])

    def evaluate_batch(self, points) -> np.ndarray:
        points = self._check_points(points)
        self.ledger.charge_model(points.shape[0])
        out = np.asarray(self.batch(points), dtype=float).reshape(points.shape[0])
        return out

    @property
    def has_analytic_gradient(self) -> bool:
        return self.gradient_batch is not None

    def gradient(self, x) -> np.ndarray:
        return self.gradients_batch(np.atleast_2d(x))[0]

    def gradients_batch(self, points) -> np.ndarray:
        if self.gradient_batch is None:
            raise ValueError(f"model '{self.name}' has no analytic gradient")
        points = self._check_points(points)
        self.ledger.charge_gradient(points.shape[0])
        return np.asarray(self.gradient_batch(points), dtype=float).reshape(points.shape)

    def with_fresh_ledger(self) -> "ModelFunction":
        """Same model, new counters; used for reference computations whose cost
        must not pollute the analysis ledger."""
        return replace(self, ledger=CostLedger())

    @staticmethod
    def from_callable(
        func: Callable[[np.ndarray], float],
        dimension: int,
        name: str = "user",
        gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        parallel_safe: bool = True,
    ) -> "ModelFunction":
        """Wrap a per-point callable, evaluating batches row by row."""

        def batch(points: np.ndarray) -> np.ndarray:
            rows = list(points)
            workers = _max_workers()
            if parallel_safe and workers > 1 and len(rows) > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    return np.fromiter(pool.map(func, rows), dtype=float, count=len(rows))
            return np.fromiter((func(r) for r in rows), dtype=float, count=len(rows))

        grad_batch = None
        if gradient is not None:
            def grad_batch(points: np.ndarray) -> np.ndarray:  # noqa: F811
                return np.vstack([np.asarray(gradient(r), dtype=float) for r in points])

        return ModelFunction(
            name=name,
            dimension=dimension,
            batch=batch,
            gradient_batch=grad_batch,
            parallel_safe=parallel_safe,
        )


@dataclass(frozen=True)
class GradientSample:
    """Partial derivatives at sampled points, with provenance.

    ``values`` holds the model outputs at the base points when the gradient
    method produced them as a by-product (finite differences always do).
    """

    points: np.ndarray
    grads: np.ndarray
    method: str  # "analytic" or "forward_fd"
    delta: Optional[float]
    values: Optional[np.ndarray]
    ledger_snapshot: Tuple[int, int]

    def __post_init__(self):
        if self.grads.shape != self.points.shape:
            raise ValueError("gradient rows must match point rows")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


# --- built-in test models ---------------------------------------------------


def linear_one_var(c: float, g0: float = 0.0) -> ModelFunction:
    """One-dimensional affine model ``g0 + c * (x - 1/2)``."""

    def batch(points):
        return g0 + c * (points[:, 0] - 0.5)

    def grads(points):
        return np.full_like(points, c)

    return ModelFunction("linear_one_var", 1, batch, grads)


def linear_sum(b: Sequence[float]) -> ModelFunction:
    """Additive linear model ``sum_i b_i x_i``."""
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or b.size < 1:
        raise ValueError("linear_sum needs a coefficient vector")

    def batch(points):
        return points @ b

    def grads(points):
        return np.broadcast_to(b, points.shape).copy()

    return ModelFunction("linear_sum", b.size, batch, grads)


def gfunction(a: Sequence[float]) -> ModelFunction:
    """Product model ``prod_i (|4 x_i - 2| + a_i) / (1 + a_i)`` on the unit cube.

    The derivative kink at ``x_i = 1/2`` uses the convention ``sign(0) = +1``;
    every axis declares the kink as a quadrature breakpoint.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size < 1:
        raise ValueError("gfunction needs a coefficient vector")
    if np.any(a < 0):
        raise ValueError("gfunction coefficients must be nonnegative")
    d = a.size

    def factors(points):
        return (np.abs(4.0 * points - 2.0) + a) / (1.0 + a)

    def batch(points):
        return factors(points).prod(axis=1)

    def grads(points):
        v = factors(points)
        sign = np.where(4.0 * points - 2.0 >= 0.0, 1.0, -1.0)
        out = np.empty_like(points)
        cols = np.arange(d)
        for i in range(d):
            others = v[:, cols != i].prod(axis=1)
            out[:, i] = 4.0 * sign[:, i] / (1.0 + a[i]) * others
        return out

    return ModelFunction(
        "gfunction", d, batch, grads, breakpoints=tuple((0.5,) for _ in range(d))
    )


# Coefficients of the four-input reduced screening test polynomial:
# linear terms, pair terms (i <= j), and triple terms x_i x_j x_4 (i <= j).
MORRIS_REDUCED_B1 = np.array([0.05, 0.59, 10.0, 0.21])
MORRIS_REDUCED_B2 = np.array(
    [
        [0.0, 80.0, 60.0, 40.0],
        [0.0, 30.0, 0.73, 0.18],
        [0.0, 0.0, 0.64, 0.93],
        [0.0, 0.0, 0.0, 0.06],
    ]
)
MORRIS_REDUCED_B3 = np.array(
    [
        [0.0, 10.0, 0.98, 0.19],
        [0.0, 0.0, 0.49, 50.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 0.0],
    ]
)


def morris_reduced() -> ModelFunction:
    """Four-input polynomial screening benchmark with strong interactions."""
    b1, b2, b3 = MORRIS_REDUCED_B1, MORRIS_REDUCED_B2, MORRIS_REDUCED_B3

    def batch(points):
        x = points
        out = x @ b1
        for i in range(4):
            for j in range(i, 4):
                if b2[i, j]:
                    out = out + b2[i, j] * x[:, i] * x[:, j]
                if b3[i, j]:
                    out = out + b3[i, j] * x[:, i] * x[:, j] * x[:, 3]
        return out

    def grads(points):
        x = points
        out = np.broadcast_to(b1, x.shape).copy()
        for i in range(4):
            for j in range(i, 4):
                if b2[i, j]:
                    out[:, i] += b2[i, j] * x[:, j]
                    out[:, j] += b2[i, j] * x[:, i]
                if b3[i, j]:
                    out[:, i] += b3[i, j] * x[:, j] * x[:, 3]
                    out[:, j] += b3[i, j] * x[:, i] * x[:, 3]
                    out[:, 3] += b3[i, j] * x[:, i] * x[:, j]
        return out

    return ModelFunction("morris_reduced", 4, batch, grads)


_BUILTINS = {
    "linear_one_var": linear_one_var,
    "linear_sum": linear_sum,
    "gfunction": gfunction,
    "morris_reduced": morris_reduced,
}


def builtin(name: str, **params) -> ModelFunction:
    """Instantiate a built-in model by name."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        known = ", ".join(sorted(_BUILTINS))
        raise ValueError(f"unknown builtin model '{name}' (known: {known})") from None
    return factory(**params)


def builtin_names() -> list[str]:
    return sorted(_BUILTINS)


# --- gradients --------------------------------------------------------------


def fd_gradient_batch(
    f: ModelFunction,
    points: np.ndarray,
    delta: float,
    bounds: Sequence[Tuple[float, float]],
    base_values: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Forward-difference gradients at every row of ``points``.

    Axes whose forward step would leave the support fall back to a backward
    difference. The base values are evaluated once and reused, so the ledger
    grows by exactly ``n * (d + 1)`` model evaluations (``n * d`` when
    ``base_values`` is supplied). Returns ``(grads, base_values)``.
    """
    if not delta > 0:
        raise ValueError(f"finite-difference step must be positive, got {delta}")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = points.shape
    if len(bounds) != d:
        raise ValueError("need one (lo, hi) bound pair per axis")
    for i, (lo, hi) in enumerate(bounds):
        col = points[:, i]
        if np.any(col < lo) or np.any(col > hi):
            raise ValueError(f"points leave the axis-{i + 1} support [{lo}, {hi}]")
        if hi - lo < delta:
            raise ValueError(f"axis-{i + 1} support is narrower than delta={delta}")

    if base_values is None:
        base_values = f.evaluate_batch(points)
    grads = np.empty_like(points)
    for i in range(d):
        _, hi = bounds[i]
        direction = np.where(points[:, i] + delta <= hi, 1.0, -1.0)
        shifted = points.copy()
        shifted[:, i] += direction * delta
        grads[:, i] = direction * (f.evaluate_batch(shifted) - base_values) / delta
    return grads, base_values


def fd_gradient(
    f: ModelFunction,
    x,
    delta: float = DEFAULT_FD_DELTA,
    bounds: Optional[Sequence[Tuple[float, float]]] = None,
) -> np.ndarray:
    """Finite-difference gradient at a single point (d + 1 model evaluations)."""
    x = np.atleast_2d(x)
    if bounds is None:
        bounds = [(-np.inf, np.inf)] * x.shape[1]
    grads, _ = fd_gradient_batch(f, x, delta, bounds)
    return grads[0]


def gradient_sample(
    f: ModelFunction,
    points: np.ndarray,
    grad_mode: str = "forward_fd",
    delta: float = DEFAULT_FD_DELTA,
    bounds: Optional[Sequence[Tuple[float, float]]] = None,
) -> GradientSample:
    """Gradients at every design point.

    ``forward_fd`` consumes exactly ``n (d + 1)`` model evaluations and keeps
    the base values; ``analytic`` consumes ``n`` gradient evaluations and
    leaves ``values`` unset.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = points.shape
    if n == 0:
        empty = np.empty((0, d))
        return GradientSample(empty, empty.copy(), grad_mode, delta, np.empty(0), f.ledger.snapshot())
    if grad_mode == "analytic":
        grads = f.gradients_batch(points)
        return GradientSample(points, grads, "analytic", None, None, f.ledger.snapshot())
    if grad_mode != "forward_fd":
        raise ValueError(f"unknown gradient mode '{grad_mode}'")
    if bounds is None:
        bounds = [(-np.inf, np.inf)] * d
    grads, values = fd_gradient_batch(f, points, delta, bounds)
    return GradientSample(points, grads, "forward_fd", delta, values, f.ledger.snapshot())
