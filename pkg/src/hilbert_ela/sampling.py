"""Samplers for bounded continuous search spaces.

All samplers are pure functions of their inputs and of an explicit
``numpy.random.Generator``; use ``derive_rng`` to split independent streams.
"""

from __future__ import annotations

import enum
import typing as t
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from .errors import CapacityError, DomainError
from .hilbert import (
    CurveParams,
    indices_to_sort_keys,
    sort_keys_to_points,
    vertex_count,
)

# Sub-sampled Hilbert curves never go below this order
MIN_SAMPLING_ORDER = 3
# Largest number of index bits a sampler will request (d * p)
MAX_CURVE_BITS = 1024

FloatArray: t.TypeAlias = npt.NDArray[np.float64]


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent stream for a task identified by ``keys`` under a parent ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([seed, *keys]))


@dataclass(frozen=True, eq=False)
class SearchSpace:
    """Axis-aligned box ``[lower, upper]``."""

    lower: FloatArray
    upper: FloatArray

    def __post_init__(self) -> None:
        lower = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size == 0:
            raise DomainError(
                f"search space bounds must be two non-empty vectors of equal length, got {lower.shape} and {upper.shape}"
            )
        if not np.all(lower < upper):
            raise DomainError("search space lower bounds must be strictly below upper bounds")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, dimension: int, low: float = -5.0, high: float = 5.0) -> SearchSpace:
        return cls(np.full(dimension, low), np.full(dimension, high))

    @property
    def dimension(self) -> int:
        return int(self.lower.size)

    @property
    def width(self) -> FloatArray:
        return self.upper - self.lower

    def contains(self, points: npt.ArrayLike) -> bool:
        x = np.asarray(points, dtype=np.float64)
        return bool(np.all((x >= self.lower) & (x <= self.upper)))


@dataclass(frozen=True, eq=False)
class OrderedSample:
    """Points (one per row), optional fitness values, and whether the row order is spatially meaningful."""

    points: FloatArray
    fitness: FloatArray | None = None
    ordered: bool = False

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim != 2:
            raise DomainError(f"sample points must be a 2-D array, got shape {points.shape}")
        object.__setattr__(self, "points", points)
        if self.fitness is not None:
            fitness = np.asarray(self.fitness, dtype=np.float64).reshape(-1)
            if fitness.size != points.shape[0]:
                raise DomainError(
                    f"fitness has {fitness.size} values but the sample has {points.shape[0]} points"
                )
            object.__setattr__(self, "fitness", fitness)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.points.shape[1])

    def take(self, indices: npt.ArrayLike, ordered: bool = True) -> OrderedSample:
        """Reorder points and fitness values together."""
        idx = np.asarray(indices, dtype=np.intp)
        fitness = None if self.fitness is None else self.fitness[idx]
        return OrderedSample(self.points[idx], fitness, ordered)

    def with_fitness(self, fitness: npt.ArrayLike) -> OrderedSample:
        return OrderedSample(self.points, np.asarray(fitness, dtype=np.float64), self.ordered)


class Sampler(str, enum.Enum):
    HILBERT = "hilbert"
    LHS = "lhs"
    RANDOM_WALK = "random_walk"
    UNIFORM = "uniform"


class Stochasticity(str, enum.Enum):
    VERTEX = "vertex"
    EDGE_UNIFORM = "edge_uniform"
    VERTEX_GAUSSIAN = "vertex_gaussian"


@dataclass(frozen=True)
class StochasticityStrategy:
    """How points are randomised around the selected curve vertices (in grid units)."""

    variant: Stochasticity = Stochasticity.VERTEX_GAUSSIAN
    sigma: float = field(default=0.3)

    def __post_init__(self) -> None:
        if self.variant is Stochasticity.VERTEX_GAUSSIAN and not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")


def sampling_order(dimension: int, n: int) -> int:
    """Smallest order >= MIN_SAMPLING_ORDER whose curve has at least ``n`` vertices."""
    p = MIN_SAMPLING_ORDER
    while (1 << (dimension * p)) < n:
        p += 1
    if dimension * p > MAX_CURVE_BITS:
        raise CapacityError(
            f"a sample of {n} points needs {dimension * p} index bits, more than the supported {MAX_CURVE_BITS}"
        )
    return p


def hilbert_sample(
    space: SearchSpace,
    n: int,
    rng: np.random.Generator,
    strategy: StochasticityStrategy = StochasticityStrategy(),
    order: int | None = None,
) -> OrderedSample:
    """Sub-sample ``n`` distinct vertices of a Hilbert curve, keeping curve order.

    The curve order defaults to the smallest order (at least 3) with enough
    vertices. Randomisation is applied in grid units, where consecutive curve
    vertices are 1 apart, and the grid ``[0, 2**p - 1]`` is then scaled
    endpoint-inclusively onto the search space.
    """
    if n < 2:
        raise DomainError(f"hilbert sampling needs at least 2 points, got {n}")
    d = space.dimension
    p = sampling_order(d, n) if order is None else order
    params = CurveParams(d, p)
    if vertex_count(params) < n:
        raise CapacityError(
            f"curve of order {p} in {d} dimensions has {vertex_count(params)} vertices, {n} requested"
        )
    keys = _draw_sorted_keys(params, n, rng)
    grid = np.asarray(sort_keys_to_points(params, keys), dtype=np.float64)
    top = float(params.side - 1)
    grid = _randomise(grid, strategy, top, rng)
    points = space.lower + grid * (space.width / top)
    # rounding may overshoot the upper corner by an ulp
    return OrderedSample(np.clip(points, space.lower, space.upper), ordered=True)


def lhs_sample(space: SearchSpace, n: int, rng: np.random.Generator) -> OrderedSample:
    """Latin hypercube: one point per stratum on every axis, uniform within its stratum."""
    if n < 1:
        raise DomainError(f"sample size must be positive, got {n}")
    d = space.dimension
    strata = np.column_stack([rng.permutation(n) for _ in range(d)])
    unit = (strata + rng.random((n, d))) / n
    return OrderedSample(space.lower + unit * space.width, ordered=False)


def random_walk_sample(
    space: SearchSpace,
    n: int,
    rng: np.random.Generator,
    max_step: float = 1.0,
) -> OrderedSample:
    """Simple random walk with per-coordinate steps in ``[-max_step, max_step]``, reflected at the bounds."""
    if n < 1:
        raise DomainError(f"sample size must be positive, got {n}")
    if not max_step > 0:
        raise DomainError(f"max_step must be positive, got {max_step}")
    d = space.dimension
    points = np.empty((n, d), dtype=np.float64)
    points[0] = rng.uniform(space.lower, space.upper)
    steps = rng.uniform(-max_step, max_step, size=(n - 1, d))
    for i in range(1, n):
        points[i] = _reflect(points[i - 1] + steps[i - 1], space.lower, space.upper)
    return OrderedSample(points, ordered=True)


def uniform_sample(space: SearchSpace, n: int, rng: np.random.Generator) -> OrderedSample:
    if n < 1:
        raise DomainError(f"sample size must be positive, got {n}")
    points = rng.uniform(space.lower, space.upper, size=(n, space.dimension))
    return OrderedSample(points, ordered=False)


def draw_sample(
    sampler: Sampler,
    space: SearchSpace,
    n: int,
    rng: np.random.Generator,
    strategy: StochasticityStrategy = StochasticityStrategy(),
) -> OrderedSample:
    if sampler is Sampler.HILBERT:
        return hilbert_sample(space, n, rng, strategy)
    if sampler is Sampler.LHS:
        return lhs_sample(space, n, rng)
    if sampler is Sampler.RANDOM_WALK:
        return random_walk_sample(space, n, rng)
    return uniform_sample(space, n, rng)


def _draw_sorted_keys(params: CurveParams, n: int, rng: np.random.Generator) -> npt.NDArray[t.Any]:
    """Draw ``n`` distinct curve positions uniformly, as sort keys in ascending order."""
    if params.bits <= 62:
        indices = np.sort(rng.choice(vertex_count(params), size=n, replace=False))
        return indices_to_sort_keys(params, indices.tolist())
    if params.d <= 63:
        # Every digit uniform in [0, 2**d) makes the whole index uniform
        keys = np.empty((0, params.p), dtype=np.uint64)
        while keys.shape[0] < n:
            extra = rng.integers(0, 1 << params.d, size=(n - keys.shape[0], params.p), dtype=np.uint64)
            keys = np.unique(np.vstack([keys, extra]), axis=0)
        # np.unique sorts rows lexicographically, which is curve order
        return keys
    n_bytes = (params.bits + 7) // 8
    mask = vertex_count(params) - 1
    chosen: set[int] = set()
    while len(chosen) < n:
        chosen.add(int.from_bytes(rng.bytes(n_bytes), "big") & mask)
    return indices_to_sort_keys(params, sorted(chosen))


def _randomise(
    grid: FloatArray,
    strategy: StochasticityStrategy,
    top: float,
    rng: np.random.Generator,
) -> FloatArray:
    if strategy.variant is Stochasticity.VERTEX_GAUSSIAN:
        noisy = grid + rng.normal(0.0, strategy.sigma, size=grid.shape)
        return np.clip(noisy, 0.0, top)
    if strategy.variant is Stochasticity.EDGE_UNIFORM:
        # First vertex, then one point on each edge between consecutive selected vertices
        r = rng.random((grid.shape[0] - 1, 1))
        along = r * grid[:-1] + (1.0 - r) * grid[1:]
        return np.vstack([grid[:1], along])
    return grid


def _reflect(x: FloatArray, lower: FloatArray, upper: FloatArray) -> FloatArray:
    width = upper - lower
    folded = np.mod(x - lower, 2.0 * width)
    return np.clip(lower + np.where(folded > width, 2.0 * width - folded, folded), lower, upper)
