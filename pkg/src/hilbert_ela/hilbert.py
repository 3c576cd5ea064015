"""Bijective mapping between Hilbert curve indices and d-dimensional grid points.

The conversions follow Skilling's transpose algorithm: a Hilbert index of
``d * p`` bits is distributed ("transposed") over ``d`` integers of ``p`` bits,
and a handful of bit exchanges turn that transpose into grid coordinates.
Index 0 maps to the all-zeros corner.

Scalar conversions work on arbitrary precision integers. Batch conversions run
the same exchanges column-wise on numpy arrays: ``uint64`` when every digit and
coordinate fits in 64 bits, ``object`` arrays of Python integers otherwise.
"""

from __future__ import annotations

import typing as t
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .errors import DomainError, RangeError

HilbertIndex: t.TypeAlias = int
GridPoint: t.TypeAlias = tuple[int, ...]


@dataclass(frozen=True)
class CurveParams:
    """Dimension count ``d`` and curve order ``p`` of a Hilbert curve."""

    d: int
    p: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.d}")
        if self.p < 1:
            raise DomainError(f"curve order must be a positive integer, got {self.p}")

    @property
    def bits(self) -> int:
        return self.d * self.p

    @property
    def side(self) -> int:
        """Number of grid cells along each axis."""
        return 1 << self.p


def vertex_count(params: CurveParams) -> int:
    return 1 << params.bits


def min_order_for_sample(n: int) -> int:
    """Smallest order ``p`` such that ``2**p > n``, i.e. ``ceil(log2(n + 1))``."""
    if n < 1:
        raise DomainError(f"sample size must be a positive integer, got {n}")
    return n.bit_length()


def index_to_point(params: CurveParams, h: HilbertIndex) -> GridPoint:
    """Return the grid vertex visited at position ``h`` of the curve."""
    if not 0 <= h < vertex_count(params):
        raise RangeError(
            f"hilbert index {h} out of range [0, 2**{params.bits}) for d={params.d}, p={params.p}"
        )
    x = np.array(_index_to_transpose(h, params.d, params.p), dtype=object)
    x = _transpose_to_axes(x.reshape(params.d, 1), params.p)
    return tuple(int(v) for v in x[:, 0])


def point_to_index(params: CurveParams, g: t.Sequence[int]) -> HilbertIndex:
    """Return the curve position of grid vertex ``g`` (inverse of ``index_to_point``)."""
    if len(g) != params.d:
        raise RangeError(f"grid point has {len(g)} coordinates, expected {params.d}")
    for coord in g:
        if not 0 <= coord < params.side:
            raise RangeError(
                f"grid coordinate {coord} out of range [0, {params.side - 1}]"
            )
    x = np.array([int(coord) for coord in g], dtype=object)
    x = _axes_to_transpose(x.reshape(params.d, 1), params.p)
    return _transpose_to_index([int(v) for v in x[:, 0]], params.p)


## Batch conversions
#
# A batch of indices is represented by "sort keys": an (n, p) array whose
# column c holds the d-bit digit of level p - 1 - c. Column 0 is the most
# significant digit, so lexicographic order of rows is curve order.


def points_to_sort_keys(params: CurveParams, grid: npt.ArrayLike) -> npt.NDArray[t.Any]:
    """Map an (n, d) array of grid points to their (n, p) sort keys."""
    x = _grid_to_columns(params, grid)
    _axes_to_transpose(x, params.p)
    return _transpose_to_keys(x, params.d, params.p)


def sort_keys_to_points(params: CurveParams, keys: npt.NDArray[t.Any]) -> npt.NDArray[t.Any]:
    """Map (n, p) sort keys back to an (n, d) array of grid points."""
    x = _keys_to_transpose(keys, params.d, params.p)
    _transpose_to_axes(x, params.p)
    return x.T


def indices_to_sort_keys(params: CurveParams, indices: t.Iterable[int]) -> npt.NDArray[t.Any]:
    values = [int(h) for h in indices]
    total = vertex_count(params)
    for h in values:
        if not 0 <= h < total:
            raise RangeError(f"hilbert index {h} out of range [0, 2**{params.bits})")
    dtype = _dtype(params)
    digit_mask = (1 << params.d) - 1
    keys = np.zeros((len(values), params.p), dtype=dtype)
    if dtype is not object and params.bits <= 64:
        h_array = np.array(values, dtype=np.uint64)
        for c in range(params.p):
            keys[:, c] = (h_array >> (params.d * (params.p - 1 - c))) & digit_mask
        return keys
    for r, h in enumerate(values):
        for c in range(params.p):
            keys[r, c] = (h >> (params.d * (params.p - 1 - c))) & digit_mask
    return keys


def sort_keys_to_indices(params: CurveParams, keys: npt.NDArray[t.Any]) -> list[HilbertIndex]:
    indices: list[int] = []
    for row in keys:
        h = 0
        for digit in row:
            h = (h << params.d) | int(digit)
        indices.append(h)
    return indices


def indices_to_points(params: CurveParams, indices: t.Iterable[int]) -> npt.NDArray[t.Any]:
    return sort_keys_to_points(params, indices_to_sort_keys(params, indices))


def points_to_indices(params: CurveParams, grid: npt.ArrayLike) -> list[HilbertIndex]:
    return sort_keys_to_indices(params, points_to_sort_keys(params, grid))


def argsort_keys(keys: npt.NDArray[t.Any]) -> npt.NDArray[np.intp]:
    """Stable argsort of sort keys in curve order."""
    if keys.shape[0] == 0:
        return np.zeros(0, dtype=np.intp)
    if keys.dtype == object:
        rows = [tuple(int(v) for v in row) for row in keys]
        return np.array(sorted(range(len(rows)), key=rows.__getitem__), dtype=np.intp)
    # lexsort uses the last key as primary key
    return np.lexsort(keys.T[::-1])


def hilbert_argsort(params: CurveParams, grid: npt.ArrayLike) -> npt.NDArray[np.intp]:
    """Permutation sorting grid points by Hilbert index, ties kept in input order."""
    return argsort_keys(points_to_sort_keys(params, grid))


## Transpose algorithm


def _dtype(params: CurveParams) -> t.Any:
    if params.d <= 64 and params.p <= 64:
        return np.uint64
    return object


def _grid_to_columns(params: CurveParams, grid: npt.ArrayLike) -> npt.NDArray[t.Any]:
    dtype = _dtype(params)
    if dtype is object:
        g = np.array(grid, dtype=object)
    else:
        g = np.asarray(grid)
        if g.size and not np.issubdtype(g.dtype, np.integer):
            raise RangeError(f"grid points must be integers, got dtype {g.dtype}")
    if g.ndim != 2 or g.shape[1] != params.d:
        raise RangeError(f"grid must have shape (n, {params.d}), got {g.shape}")
    if g.size:
        low, high = g.min(), g.max()
        if low < 0 or high >= params.side:
            raise RangeError(
                f"grid coordinate out of range [0, {params.side - 1}]: min={low}, max={high}"
            )
    return np.array(g.T, dtype=dtype)


def _index_to_transpose(h: int, d: int, p: int) -> list[int]:
    x = [0] * d
    for j in range(p):
        for i in range(d):
            x[i] |= ((h >> (j * d + d - 1 - i)) & 1) << j
    return x


def _transpose_to_index(x: list[int], p: int) -> int:
    h = 0
    for j in range(p - 1, -1, -1):
        for coord in x:
            h = (h << 1) | ((coord >> j) & 1)
    return h


def _transpose_to_keys(x: npt.NDArray[t.Any], d: int, p: int) -> npt.NDArray[t.Any]:
    keys = np.zeros((x.shape[1], p), dtype=x.dtype)
    for c in range(p):
        level = p - 1 - c
        for i in range(d):
            keys[:, c] |= ((x[i] >> level) & 1) << (d - 1 - i)
    return keys


def _keys_to_transpose(keys: npt.NDArray[t.Any], d: int, p: int) -> npt.NDArray[t.Any]:
    x = np.zeros((d, keys.shape[0]), dtype=keys.dtype)
    for c in range(p):
        level = p - 1 - c
        for i in range(d):
            x[i] |= ((keys[:, c] >> (d - 1 - i)) & 1) << level
    return x


def _exchange(x: npt.NDArray[t.Any], i: int, q: int, mask: int) -> None:
    # Invert the low bits of x[0] where bit q of x[i] is set, else swap them with x[i]
    flip = np.asarray((x[i] & q) != 0, dtype=bool)
    swap = (x[0] ^ x[i]) & mask
    swap[flip] = 0
    x[0] ^= swap
    x[i] ^= swap
    x[0, flip] ^= mask


def _transpose_to_axes(x: npt.NDArray[t.Any], p: int) -> npt.NDArray[t.Any]:
    d = x.shape[0]
    # Gray decode
    carry = x[d - 1] >> 1
    for i in range(d - 1, 0, -1):
        x[i] ^= x[i - 1]
    x[0] ^= carry
    # Undo excess work
    q = 2
    while q != 1 << p:
        for i in range(d - 1, -1, -1):
            _exchange(x, i, q, q - 1)
        q <<= 1
    return x


def _axes_to_transpose(x: npt.NDArray[t.Any], p: int) -> npt.NDArray[t.Any]:
    d = x.shape[0]
    top = 1 << (p - 1)
    # Inverse undo
    q = top
    while q > 1:
        for i in range(d):
            _exchange(x, i, q, q - 1)
        q >>= 1
    # Gray encode
    for i in range(1, d):
        x[i] ^= x[i - 1]
    carry = np.zeros_like(x[0])
    q = top
    while q > 1:
        carry[np.asarray((x[d - 1] & q) != 0, dtype=bool)] ^= q - 1
        q >>= 1
    for i in range(d):
        x[i] ^= carry
    return x
