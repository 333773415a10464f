"""Uniform box grids, sampled scalar fields and their quadrature.

Nodes are x_i = -L + i h, i = 0..M-1, along every axis (the origin is a node
because M is even). Values are stored row-major with shape (M,)*N. All norms
and pairings use the midpoint rule h^N * sum.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from nlhelm.errors import DomainError, GridMismatchError

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
BoolArray = NDArray[np.bool_]

MIN_POINTS = 8
SUPPORTED_DIMENSIONS = (2, 3, 4)
# Residual checks stay inside [-WINDOW_FRACTION*L, WINDOW_FRACTION*L)^N.
WINDOW_FRACTION = 0.75


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Grid:
    """Cubic grid on [-L, L)^N with M points per axis."""

    N: int
    M: int
    L: float

    def __post_init__(self) -> None:
        if self.N not in SUPPORTED_DIMENSIONS:
            raise DomainError(f"grid dimension must be one of {SUPPORTED_DIMENSIONS}, got {self.N}")
        if self.M < MIN_POINTS or self.M & (self.M - 1):
            raise DomainError(f"points per axis must be a power of two >= {MIN_POINTS}, got {self.M}")
        if not self.L > 0:
            raise DomainError(f"half-extent L must be > 0, got {self.L}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.M

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.M,) * self.N

    @property
    def size(self) -> int:
        return self.M ** self.N

    @property
    def cell_volume(self) -> float:
        return self.h ** self.N

    @property
    def origin_index(self) -> tuple[int, ...]:
        return (self.M // 2,) * self.N

    def axis(self) -> FloatArray:
        return -self.L + self.h * np.arange(self.M)

    def coordinates(self) -> tuple[FloatArray, ...]:
        """Per-axis node coordinates broadcast to the full grid shape."""
        return tuple(np.meshgrid(*([self.axis()] * self.N), indexing="ij"))

    def radius(self) -> FloatArray:
        return np.sqrt(sum(c * c for c in self.coordinates()))

    def scaled(self, factor: float) -> "Grid":
        """Same index layout on the box scaled by ``factor``."""
        if not factor > 0:
            raise DomainError(f"scale factor must be > 0, got {factor}")
        return Grid(self.N, self.M, self.L * factor)

    def zeros(self) -> "ScalarField":
        return ScalarField(self, np.zeros(self.shape))

    def field(self, values: ArrayLike) -> "ScalarField":
        return ScalarField(self, values)

    def window(self, fraction: float = WINDOW_FRACTION) -> "SupportMask":
        """Cells with every coordinate in [-fraction*L, fraction*L)."""
        bound = fraction * self.L
        inside = np.ones(self.shape, dtype=bool)
        for c in self.coordinates():
            inside &= (c >= -bound) & (c < bound)
        return SupportMask(self, inside)


# ---------------------------------------------------------------------------
# Fields and masks
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real field sampled on a grid; immutable once built."""

    grid: Grid
    values: FloatArray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.size != self.grid.size:
            raise GridMismatchError(f"field has {arr.size} values, grid needs {self.grid.size}")
        arr = arr.reshape(self.grid.shape)
        if not np.all(np.isfinite(arr)):
            raise DomainError("field values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def flat(self) -> FloatArray:
        return self.values.ravel()

    def _other_values(self, other: Union["ScalarField", float]) -> FloatArray | float:
        if isinstance(other, ScalarField):
            check_same_grid(self.grid, other.grid)
            return other.values
        return float(other)

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._other_values(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._other_values(other))

    def __rsub__(self, other):
        return ScalarField(self.grid, self._other_values(other) - self.values)

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * self._other_values(other))

    __rmul__ = __mul__

    def __truediv__(self, other: float):
        return ScalarField(self.grid, self.values / float(other))

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class SupportMask:
    """Boolean indicator of a set of grid cells."""

    grid: Grid
    indicator: BoolArray

    def __post_init__(self) -> None:
        arr = np.array(self.indicator, dtype=bool, copy=True)
        if arr.size != self.grid.size:
            raise GridMismatchError(f"mask has {arr.size} flags, grid needs {self.grid.size}")
        arr = arr.reshape(self.grid.shape)
        arr.setflags(write=False)
        object.__setattr__(self, "indicator", arr)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.indicator))

    @property
    def is_empty(self) -> bool:
        return not self.indicator.any()

    def restrict(self, f: ScalarField) -> ScalarField:
        check_same_grid(self.grid, f.grid)
        return ScalarField(self.grid, np.where(self.indicator, f.values, 0.0))

    def indices(self) -> NDArray[np.intp]:
        """Multi-indices of the cells in the mask, shape (count, N)."""
        return np.argwhere(self.indicator)

    def centers(self) -> FloatArray:
        """Cell-center coordinates of the mask, shape (count, N)."""
        return -self.grid.L + self.grid.h * self.indices()

    def __and__(self, other: "SupportMask") -> "SupportMask":
        check_same_grid(self.grid, other.grid)
        return SupportMask(self.grid, self.indicator & other.indicator)


def check_same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


# ---------------------------------------------------------------------------
# Array-level kernels (used directly by the iterative solvers)
# ---------------------------------------------------------------------------
def lp_norm_values(values: FloatArray, q: float, cell_volume: float) -> float:
    if not q > 1:
        raise DomainError(f"exponent q must be > 1, got {q}")
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    if scale == 0.0:
        return 0.0
    return scale * float(cell_volume * np.sum((np.abs(values) / scale) ** q)) ** (1.0 / q)


def dual_map_values(values: FloatArray, q: float) -> FloatArray:
    """|g|^(q-2) g pointwise, 0 -> 0."""
    if not q > 1:
        raise DomainError(f"exponent q must be > 1, got {q}")
    return np.sign(values) * np.abs(values) ** (q - 1.0)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------
def lp_norm(f: ScalarField, q: float) -> float:
    """(h^N sum |f_i|^q)^(1/q) for q in (1, inf)."""
    return lp_norm_values(f.values, q, f.grid.cell_volume)


def inner(f: ScalarField, g: ScalarField) -> float:
    """Quadrature pairing h^N sum f_i g_i."""
    check_same_grid(f.grid, g.grid)
    return float(np.dot(f.flat, g.flat)) * f.grid.cell_volume


def dual_map(g: ScalarField, q: float) -> ScalarField:
    return ScalarField(g.grid, dual_map_values(g.values, q))


def discrete_laplacian(f: ScalarField) -> ScalarField:
    """Second-order central differences with periodic wraparound.

    Values within one cell of the box boundary see the opposite face; callers
    restrict to an interior window.
    """
    h2 = f.grid.h ** 2
    out = np.zeros_like(f.values)
    for axis in range(f.grid.N):
        out += np.roll(f.values, 1, axis=axis) + np.roll(f.values, -1, axis=axis)
    out -= 2.0 * f.grid.N * f.values
    return ScalarField(f.grid, out / h2)


def mask_from_weight(Q: ScalarField) -> tuple[SupportMask, SupportMask]:
    """A_+ = {Q > 0} and A_- = {Q < 0}; cells with Q = 0 belong to neither."""
    return SupportMask(Q.grid, Q.values > 0), SupportMask(Q.grid, Q.values < 0)
