"""Experimental designs: (quasi-)Monte Carlo point sets on the unit cube mapped
through marginal quantiles, pick-freeze matrix pairs, and one-at-a-time
screening trajectories.

The low-discrepancy stream is a base-2 digital sequence (Sobol' construction
with published direction numbers); the index-0 all-zeros point is always
skipped so quantile transforms of unbounded marginals stay finite. The
pseudo-random stream is a seeded 64-bit counter-based generator (Philox).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.stats import qmc

from .distributions import InputSpace
from .errors import UnsupportedMeasureError

MAX_LOWDISCREPANCY_DIM = int(qmc.Sobol.MAXDIM)


@dataclass(frozen=True)
class Pseudo:
    """Seeded counter-based pseudo-random stream."""

    seed: int = 0
    kind = "pseudo"


@dataclass(frozen=True)
class LowDiscrepancy:
    """Base-2 digital sequence, starting ``skip`` indices into the stream.

    ``skip`` must be at least 1: index 0 is the all-zeros point, whose
    quantile image is infinite for unbounded marginals.
    """

    skip: int = 1
    kind = "lowdiscrepancy"

    def __post_init__(self):
        if self.skip < 1:
            raise ValueError("lowdiscrepancy skip must be >= 1 (index 0 is the origin)")


PointGenerator = Union[Pseudo, LowDiscrepancy]


def _philox(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def unit_sample(generator: PointGenerator, n: int, d: int) -> np.ndarray:
    """``(n, d)`` matrix in ``[0, 1)``, deterministic given the generator state."""
    if n < 0:
        raise ValueError("sample size must be nonnegative")
    if d < 1:
        raise ValueError("dimension must be positive")
    if isinstance(generator, Pseudo):
        return _philox(generator.seed).random((n, d))
    if d > MAX_LOWDISCREPANCY_DIM:
        raise ValueError(
            f"low-discrepancy stream supports at most {MAX_LOWDISCREPANCY_DIM} dimensions, got {d}"
        )
    engine = qmc.Sobol(d, scramble=False)
    engine.fast_forward(generator.skip)
    with warnings.catch_warnings():
        # arbitrary n is allowed; the balance warning only concerns non-2^k sizes
        warnings.simplefilter("ignore", UserWarning)
        return engine.random(n)


@dataclass(frozen=True)
class SampleDesign:
    """Point set in the input space together with its unit-cube source."""

    unit_points: np.ndarray
    points: np.ndarray
    generator: PointGenerator

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def generate(space: InputSpace, n: int, generator: PointGenerator) -> SampleDesign:
    """Sample ``n`` input points by quantile-transforming a unit-cube stream."""
    unit = unit_sample(generator, n, space.dimension)
    points = space.quantile_transform(unit) if n else unit.copy()
    return SampleDesign(unit, points, generator)


@dataclass(frozen=True)
class PickFreezeDesign:
    """Two independent matrices A and B plus the column-swap accessors."""

    a: np.ndarray
    b: np.ndarray
    generator: PointGenerator

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def d(self) -> int:
        return self.a.shape[1]

    def swapped(self, i: int) -> np.ndarray:
        """A with column ``i`` taken from B."""
        self._check_axis(i)
        out = self.a.copy()
        out[:, i] = self.b[:, i]
        return out

    def swapped_pair(self, i: int, j: int) -> np.ndarray:
        """A with columns ``i`` and ``j`` taken from B."""
        self._check_axis(i)
        self._check_axis(j)
        if i == j:
            raise ValueError("pair must name two distinct columns")
        out = self.a.copy()
        out[:, i] = self.b[:, i]
        out[:, j] = self.b[:, j]
        return out

    def _check_axis(self, i: int) -> None:
        if not 0 <= i < self.d:
            raise ValueError(f"axis {i} out of range for dimension {self.d}")


def pick_freeze(space: InputSpace, n: int, generator: PointGenerator) -> PickFreezeDesign:
    """Build the A/B matrix pair from disjoint portions of one stream.

    Pseudo streams derive two child seeds from the configured seed; the
    low-discrepancy stream draws ``2d``-dimensional points and splits them
    into the two ``d``-column blocks.
    """
    if n < 1:
        raise ValueError("pick-freeze needs n >= 1")
    d = space.dimension
    if isinstance(generator, Pseudo):
        child_a, child_b = np.random.SeedSequence(generator.seed).spawn(2)
        unit_a = np.random.Generator(np.random.Philox(child_a)).random((n, d))
        unit_b = np.random.Generator(np.random.Philox(child_b)).random((n, d))
    else:
        both = unit_sample(LowDiscrepancy(generator.skip), n, 2 * d)
        unit_a, unit_b = both[:, :d], both[:, d:]
    return PickFreezeDesign(
        space.quantile_transform(unit_a), space.quantile_transform(unit_b), generator
    )


@dataclass(frozen=True)
class MorrisDesign:
    """R one-at-a-time trajectories on a p-level unit grid.

    ``trajectories`` has shape ``(r, d + 1, d)``; step ``k`` of trajectory
    ``t`` perturbs axis ``axes[t, k]`` by ``signed_deltas[t, k]``.
    """

    trajectories: np.ndarray
    axes: np.ndarray
    signed_deltas: np.ndarray
    delta: float
    p: int

    @property
    def r(self) -> int:
        return self.trajectories.shape[0]

    @property
    def d(self) -> int:
        return self.trajectories.shape[2]


def morris_trajectories(
    space: InputSpace, r: int, p: int, delta_levels: int = 0, seed: int = 0
) -> MorrisDesign:
    """Random trajectories for elementary-effect screening.

    ``delta = delta_levels / (p - 1)``; ``delta_levels`` defaults to the usual
    ``p / 2`` (rounded). Start points are uniform over the whole grid and step
    directions reflect at the cube boundary. Marginals must have bounded
    support so grid points map to finite inputs.
    """
    if r < 1:
        raise ValueError("need at least one trajectory")
    if p < 2:
        raise ValueError("grid needs p >= 2 levels")
    if delta_levels == 0:
        delta_levels = max(1, round(p / 2))
    if not 1 <= delta_levels <= p - 1:
        raise ValueError(f"delta_levels must lie in [1, {p - 1}], got {delta_levels}")
    for i, (lo, hi) in enumerate(space.supports()):
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise UnsupportedMeasureError(
                f"screening trajectories need bounded marginals; axis {i + 1} is unbounded"
            )
    d = space.dimension
    delta = delta_levels / (p - 1)
    rng = _philox(seed)

    # start levels where at least one step direction stays inside the cube
    levels = np.arange(p)
    feasible = levels[(levels + delta_levels <= p - 1) | (levels - delta_levels >= 0)]

    trajectories = np.empty((r, d + 1, d))
    axes = np.empty((r, d), dtype=int)
    deltas = np.empty((r, d))
    for t in range(r):
        x = feasible[rng.integers(0, feasible.size, size=d)] / (p - 1)
        order = rng.permutation(d)
        direction = rng.choice((-1.0, 1.0), size=d)
        trajectories[t, 0] = x
        for k, axis in enumerate(order):
            step = direction[axis] * delta
            if not 0.0 <= x[axis] + step <= 1.0:
                step = -step
            x = x.copy()
            x[axis] += step
            trajectories[t, k + 1] = x
            axes[t, k] = axis
            deltas[t, k] = step
    return MorrisDesign(trajectories, axes, deltas, delta, p)


def morris_points(space: InputSpace, design: MorrisDesign) -> np.ndarray:
    """Input-space coordinates of every trajectory point, shape ``(r, d+1, d)``."""
    flat = design.trajectories.reshape(-1, design.d)
    return space.quantile_transform(flat).reshape(design.trajectories.shape)
