"""Dense grid containers and the two sampling/differencing primitives.

Storage is row-major ``(row, col)`` numpy arrays in float32; reductions
elsewhere in the package promote to float64. Public APIs that take a point
use ``(x, y)`` order, i.e. ``(col, row)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RangeError, ShapeError

STORAGE_DTYPE = np.float32


def _frozen(array, dtype=STORAGE_DTYPE):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _check_finite(values, what):
    if not np.all(np.isfinite(values)):
        raise RangeError(f"{what} contains NaN or Inf")


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Immutable H x W scalar field."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2:
            raise ShapeError(f"Grid2D expects a 2-D array, got shape {values.shape}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ShapeError(f"Grid2D needs height, width >= 1, got {values.shape}")
        values = _frozen(values)
        _check_finite(values, "Grid2D")
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @classmethod
    def full(cls, height, width, value):
        return cls(np.full((height, width), value))


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Immutable H x W x C feature grid, channel axis last."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 3:
            raise ShapeError(f"FeatureMap expects (H, W, C), got shape {values.shape}")
        if min(values.shape) < 1:
            raise ShapeError(f"FeatureMap dimensions must be >= 1, got {values.shape}")
        values = _frozen(values)
        _check_finite(values, "FeatureMap")
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True, eq=False)
class DisparityField:
    """Disparity in pixels plus a validity mask.

    Positive disparity means the right-image match sits ``d`` pixels to the
    left of the left-image pixel. Invalid pixels carry an arbitrary finite
    placeholder (0) in ``grid``.
    """

    grid: Grid2D
    valid: np.ndarray

    def __post_init__(self):
        valid = np.asarray(self.valid, dtype=bool)
        if valid.shape != self.grid.shape:
            raise ShapeError(
                f"validity mask shape {valid.shape} != grid shape {self.grid.shape}"
            )
        if np.any(self.grid.values[valid] < 0):
            raise RangeError("valid disparities must be >= 0")
        object.__setattr__(self, "valid", _frozen(valid, bool))

    @classmethod
    def from_array(cls, values, valid=None, dmax=None):
        """Build from a raw array; non-finite entries become invalid."""
        values = np.asarray(values, dtype=np.float64)
        finite = np.isfinite(values)
        mask = finite if valid is None else (np.asarray(valid, dtype=bool) & finite)
        field = cls(Grid2D(np.where(finite, values, 0.0)), mask)
        if dmax is not None:
            field.check_range(dmax)
        return field

    def check_range(self, dmax):
        """Raise :class:`RangeError` if a valid disparity exceeds ``dmax``."""
        if np.any(self.grid.values[self.valid] > dmax):
            raise RangeError(f"valid disparities must be <= dmax={dmax}")
        return self

    @property
    def values(self) -> np.ndarray:
        return self.grid.values

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape

    def replace(self, values):
        """Same validity mask, new disparity values."""
        return DisparityField(Grid2D(values), self.valid)


@dataclass(frozen=True, eq=False)
class UncertaintyField:
    """Per-pixel log-variance; higher means less reliable."""

    grid: Grid2D

    @classmethod
    def from_array(cls, values):
        return cls(Grid2D(values))

    @property
    def values(self) -> np.ndarray:
        return self.grid.values

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape


def bilinear_sample(grid: Grid2D, x: float, y: float) -> float:
    """Bilinearly interpolate ``grid`` at column ``x``, row ``y``."""
    h, w = grid.shape
    if not (0 <= x <= w - 1 and 0 <= y <= h - 1):
        raise RangeError(f"sample point ({x}, {y}) outside [0, {w - 1}] x [0, {h - 1}]")
    v = grid.values
    x0 = min(int(np.floor(x)), w - 1)
    y0 = min(int(np.floor(y)), h - 1)
    x1 = min(x0 + 1, w - 1)
    y1 = min(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    top = (1.0 - fx) * float(v[y0, x0]) + fx * float(v[y0, x1])
    bottom = (1.0 - fx) * float(v[y1, x0]) + fx * float(v[y1, x1])
    return (1.0 - fy) * top + fy * bottom


def bilinear_sample_array(values: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorised bilinear lookup; coordinates are clipped to the grid."""
    values = np.asarray(values, dtype=np.float64)
    h, w = values.shape
    x = np.clip(np.asarray(x, dtype=np.float64), 0, w - 1)
    y = np.clip(np.asarray(y, dtype=np.float64), 0, h - 1)
    x0 = np.minimum(np.floor(x).astype(np.intp), w - 1)
    y0 = np.minimum(np.floor(y).astype(np.intp), h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    top = (1.0 - fx) * values[y0, x0] + fx * values[y0, x1]
    bottom = (1.0 - fx) * values[y1, x0] + fx * values[y1, x1]
    return (1.0 - fy) * top + fy * bottom


def forward_diff(grid: Grid2D, axis: str) -> Grid2D:
    """Forward difference ``neighbor - self`` along ``axis`` ('x' or 'y').

    The output loses one column (x) or one row (y).
    """
    return Grid2D(forward_diff_array(grid.values, axis))


def forward_diff_array(values: np.ndarray, axis: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if axis == "x":
        if values.shape[1] < 2:
            raise ShapeError("forward_diff along x needs width >= 2")
        return values[:, 1:] - values[:, :-1]
    if axis == "y":
        if values.shape[0] < 2:
            raise ShapeError("forward_diff along y needs height >= 2")
        return values[1:, :] - values[:-1, :]
    raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
