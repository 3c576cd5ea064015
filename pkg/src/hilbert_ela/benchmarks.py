"""A small black-box benchmark suite: two functions for each of the five BBOB groups.

Base formulas follow the BBOB definitions (ids are the BBOB function numbers)
without the irregularity and asymmetry transformations. An instance is a
seeded shift in ``[-4, 4]^d``, an offset ``f_opt`` in ``[-100, 100]`` and, for
every group but the separable one, a seeded random rotation. Every base
function is 0 at the origin, so ``f(shift) == f_opt``.
"""

from __future__ import annotations

import math
import typing as t
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import pandas as pd

from .errors import DomainError
from .sampling import FloatArray, derive_rng

GROUP_NAMES = {
    0: "control",
    1: "separable",
    2: "low or moderate conditioning",
    3: "unimodal with high conditioning",
    4: "multimodal with adequate global structure",
    5: "multimodal with weak global structure",
}

CONTROL_ID = 0
SHIFT_BOUND = 4.0
F_OPT_BOUND = 100.0

BaseFn: t.TypeAlias = t.Callable[[FloatArray], FloatArray]


def _conditioning(d: int, alpha: float) -> FloatArray:
    if d == 1:
        return np.ones(1)
    return alpha ** (0.5 * np.arange(d) / (d - 1))


def _constant(z: FloatArray) -> FloatArray:
    return np.zeros(z.shape[0])


def _sphere(z: FloatArray) -> FloatArray:
    return np.sum(z**2, axis=1)


def _rastrigin(z: FloatArray) -> FloatArray:
    d = z.shape[1]
    return 10.0 * (d - np.sum(np.cos(2.0 * np.pi * z), axis=1)) + np.sum(z**2, axis=1)


def _attractive_sector(z: FloatArray) -> FloatArray:
    zc = z * _conditioning(z.shape[1], 10.0)
    scale = np.where(zc > 0, 100.0, 1.0)
    return np.sum((scale * zc) ** 2, axis=1) ** 0.9


def _rosenbrock(z: FloatArray) -> FloatArray:
    w = max(1.0, math.sqrt(z.shape[1]) / 8.0) * z + 1.0
    head, tail = w[:, :-1], w[:, 1:]
    return np.sum(100.0 * (head**2 - tail) ** 2 + (head - 1.0) ** 2, axis=1)


def _ellipsoid(z: FloatArray) -> FloatArray:
    d = z.shape[1]
    weights = 10.0 ** (6.0 * np.arange(d) / (d - 1)) if d > 1 else np.ones(1)
    return np.sum(weights * z**2, axis=1)


def _discus(z: FloatArray) -> FloatArray:
    return 1e6 * z[:, 0] ** 2 + np.sum(z[:, 1:] ** 2, axis=1)


def _conditioned_rastrigin(z: FloatArray) -> FloatArray:
    return _rastrigin(z * _conditioning(z.shape[1], 10.0))


def _schaffer_f7(z: FloatArray) -> FloatArray:
    zc = z * _conditioning(z.shape[1], 10.0)
    s = np.sqrt(zc[:, :-1] ** 2 + zc[:, 1:] ** 2)
    root = np.sqrt(s)
    return np.mean(root + root * np.sin(50.0 * s**0.2) ** 2, axis=1) ** 2


_SCHWEFEL_OPT = 420.9687462275036


def _schwefel_term(s: FloatArray) -> FloatArray:
    return -s * np.sin(np.sqrt(np.abs(s)))


def _schwefel(z: FloatArray) -> FloatArray:
    s = _SCHWEFEL_OPT + 50.0 * z
    optimum = _schwefel_term(np.array(_SCHWEFEL_OPT))
    penalty = np.maximum(0.0, np.abs(s) - 500.0) ** 2
    return np.sum(_schwefel_term(s) - optimum + penalty, axis=1)


def _lunacek_bi_rastrigin(z: FloatArray) -> FloatArray:
    d = z.shape[1]
    mu0 = 2.5
    s = 1.0 - 1.0 / (2.0 * math.sqrt(d + 20.0) - 8.2)
    mu1 = -math.sqrt((mu0**2 - 1.0) / s)
    first = np.sum(z**2, axis=1)
    second = d + s * np.sum((z + mu0 - mu1) ** 2, axis=1)
    zc = z * _conditioning(d, 100.0)
    return np.minimum(first, second) + 10.0 * (d - np.sum(np.cos(2.0 * np.pi * zc), axis=1))


@dataclass(frozen=True)
class BaseFunction:
    id: int
    name: str
    group: int
    fn: BaseFn


BASE_FUNCTIONS: dict[int, BaseFunction] = {
    base.id: base
    for base in (
        BaseFunction(1, "sphere", 1, _sphere),
        BaseFunction(3, "separable_rastrigin", 1, _rastrigin),
        BaseFunction(6, "attractive_sector", 2, _attractive_sector),
        BaseFunction(8, "rosenbrock", 2, _rosenbrock),
        BaseFunction(10, "rotated_ellipsoid", 3, _ellipsoid),
        BaseFunction(11, "discus", 3, _discus),
        BaseFunction(15, "rotated_rastrigin", 4, _conditioned_rastrigin),
        BaseFunction(17, "schaffer_f7", 4, _schaffer_f7),
        BaseFunction(20, "schwefel", 5, _schwefel),
        BaseFunction(24, "lunacek_bi_rastrigin", 5, _lunacek_bi_rastrigin),
    )
}

_CONTROL = BaseFunction(CONTROL_ID, "constant", 0, _constant)


@dataclass(frozen=True, eq=False)
class ObjectiveFunction:
    """A benchmark function materialised for one dimension and instance."""

    id: int
    name: str
    group: int
    dimension: int
    instance: int
    shift: FloatArray
    rotation: FloatArray | None
    f_opt: float

    def __post_init__(self) -> None:
        if self.id != CONTROL_ID and self.id not in BASE_FUNCTIONS:
            raise DomainError(f"unknown function id {self.id}")
        if self.group not in GROUP_NAMES:
            raise DomainError(f"function group must lie in [1, 5] (0 for the control), got {self.group}")
        shift = np.asarray(self.shift, dtype=np.float64).reshape(-1)
        if shift.size != self.dimension:
            raise DomainError(f"shift has {shift.size} values, expected {self.dimension}")
        if np.any(np.abs(shift) > SHIFT_BOUND):
            raise DomainError(f"shift must lie within [-{SHIFT_BOUND}, {SHIFT_BOUND}]^d")
        object.__setattr__(self, "shift", shift)
        if self.rotation is not None:
            rotation = np.asarray(self.rotation, dtype=np.float64)
            if rotation.shape != (self.dimension, self.dimension):
                raise DomainError(f"rotation must be a {self.dimension}x{self.dimension} matrix")
            if not np.allclose(rotation.T @ rotation, np.eye(self.dimension), rtol=0, atol=1e-9):
                raise DomainError("rotation matrix is not orthogonal")
            object.__setattr__(self, "rotation", rotation)

    def __call__(self, x: npt.ArrayLike) -> float:
        return evaluate(self, x)

    @property
    def base(self) -> BaseFunction:
        return _CONTROL if self.id == CONTROL_ID else BASE_FUNCTIONS[self.id]


def random_rotation(rng: np.random.Generator, dimension: int) -> FloatArray:
    """Orthogonal matrix from the QR decomposition of a Gaussian matrix, diagonal signs fixed."""
    q, r = np.linalg.qr(rng.standard_normal((dimension, dimension)))
    return q * np.sign(np.diag(r))


def make_function(function_id: int, dimension: int, instance: int) -> ObjectiveFunction:
    if function_id not in BASE_FUNCTIONS:
        raise DomainError(f"unknown function id {function_id}")
    if dimension < 2:
        raise DomainError(f"benchmark functions need dimension >= 2, got {dimension}")
    base = BASE_FUNCTIONS[function_id]
    rng = derive_rng(function_id, dimension, instance)
    shift = rng.uniform(-SHIFT_BOUND, SHIFT_BOUND, size=dimension)
    f_opt = float(rng.uniform(-F_OPT_BOUND, F_OPT_BOUND))
    rotation = random_rotation(rng, dimension) if base.group != 1 else None
    return ObjectiveFunction(
        id=base.id,
        name=base.name,
        group=base.group,
        dimension=dimension,
        instance=instance,
        shift=shift,
        rotation=rotation,
        f_opt=f_opt,
    )


def control_function(dimension: int, instance: int = 0) -> ObjectiveFunction:
    """Constant function, used as a control row in feature sweeps."""
    return ObjectiveFunction(
        id=CONTROL_ID,
        name=_CONTROL.name,
        group=_CONTROL.group,
        dimension=dimension,
        instance=instance,
        shift=np.zeros(dimension),
        rotation=None,
        f_opt=0.0,
    )


def suite(dimension: int, instances: t.Iterable[int]) -> list[ObjectiveFunction]:
    if dimension < 2:
        raise DomainError(f"the suite needs dimension >= 2, got {dimension}")
    return [
        make_function(function_id, dimension, instance)
        for instance in instances
        for function_id in BASE_FUNCTIONS
    ]


def evaluate_many(f: ObjectiveFunction, points: npt.ArrayLike) -> FloatArray:
    """Evaluate ``f`` on every row of ``points``."""
    x = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if x.shape[1] != f.dimension:
        raise DomainError(f"points have {x.shape[1]} dimensions, function expects {f.dimension}")
    z = x - f.shift
    if f.rotation is not None:
        z = z @ f.rotation.T
    return f.base.fn(z) + f.f_opt


def evaluate(f: ObjectiveFunction, x: npt.ArrayLike) -> float:
    point = np.asarray(x, dtype=np.float64).reshape(-1)
    if point.size != f.dimension:
        raise DomainError(f"point has {point.size} coordinates, function expects {f.dimension}")
    return float(evaluate_many(f, point[np.newaxis, :])[0])


def suite_manifest(functions: t.Iterable[ObjectiveFunction]) -> pd.DataFrame:
    return pd.DataFrame(
        [(f.id, f.name, f.group, f.dimension, f.instance) for f in functions],
        columns=["id", "name", "group", "dimension", "instance"],
    )
