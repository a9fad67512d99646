"""Correlation cost volume, soft-argmin initialisation and a margin-based
ambiguity score used as a stand-in uncertainty."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RangeError, ShapeError
from .field_core import DisparityField, FeatureMap, Grid2D, UncertaintyField, _frozen

#: Score stored where the right-image candidate falls off the left edge.
OUT_OF_RANGE_FILL = -1.0e6


@dataclass(frozen=True, eq=False)
class CostVolume:
    """Matching scores indexed ``scores[row, col, k]`` for disparity ``k``."""

    scores: np.ndarray
    fill_value: float = OUT_OF_RANGE_FILL

    def __post_init__(self):
        scores = np.asarray(self.scores)
        if scores.ndim != 3:
            raise ShapeError(f"cost volume must be (H, W, Dmax), got {scores.shape}")
        if scores.shape[2] < 2:
            raise ShapeError("cost volume needs dmax >= 2")
        scores = _frozen(scores)
        if not np.all(np.isfinite(scores)):
            raise RangeError("cost volume scores must be finite")
        object.__setattr__(self, "scores", scores)

    @property
    def height(self) -> int:
        return self.scores.shape[0]

    @property
    def width(self) -> int:
        return self.scores.shape[1]

    @property
    def dmax(self) -> int:
        return self.scores.shape[2]

    def in_range(self) -> np.ndarray:
        """Boolean (W, Dmax) table: True where ``col - k >= 0``."""
        cols = np.arange(self.width)[:, None]
        ks = np.arange(self.dmax)[None, :]
        return cols - ks >= 0


def toy_featurize(image: Grid2D, radius: int) -> FeatureMap:
    """Mean-subtracted (2r+1)^2 intensity patch per pixel, edges clamped.

    Channel ``c`` holds offset ``(dy, dx) = divmod(c, 2r+1) - r``.
    """
    if radius < 0:
        raise RangeError("radius must be >= 0")
    img = image.values.astype(np.float64)
    h, w = img.shape
    size = 2 * radius + 1
    padded = np.pad(img, radius, mode="edge")
    patches = np.empty((h, w, size * size))
    for c in range(size * size):
        dy, dx = divmod(c, size)
        patches[:, :, c] = padded[dy : dy + h, dx : dx + w]
    patches -= patches.mean(axis=2, keepdims=True)
    return FeatureMap(patches)


def correlation_f64(Fl: FeatureMap, Fr: FeatureMap, dmax: int,
                    fill_value: float = OUT_OF_RANGE_FILL) -> np.ndarray:
    """Float64 correlation volume before storage rounding.

    Channels are accumulated sequentially (c = 0, 1, ...) so the result is
    reproducible against a plain triple loop.
    """
    if Fl.values.shape != Fr.values.shape:
        raise ShapeError(f"feature shapes differ: {Fl.values.shape} vs {Fr.values.shape}")
    h, w, depth = Fl.values.shape
    if dmax > w:
        raise ShapeError(f"dmax={dmax} exceeds image width {w}")
    if dmax < 2:
        raise ShapeError("dmax must be >= 2")
    left = Fl.values.astype(np.float64)
    right = Fr.values.astype(np.float64)
    norm = math.sqrt(depth)
    out = np.full((h, w, dmax), fill_value, dtype=np.float64)
    for k in range(dmax):
        acc = np.zeros((h, w - k))
        for c in range(depth):
            acc += left[:, k:, c] * right[:, : w - k, c]
        out[:, k:, k] = acc / norm
    return out


def build_cost_volume(Fl: FeatureMap, Fr: FeatureMap, dmax: int,
                      fill_value: float = OUT_OF_RANGE_FILL) -> CostVolume:
    """``scores[i, j, k] = <Fl(i, j), Fr(i, j - k)> / sqrt(C)``."""
    return CostVolume(correlation_f64(Fl, Fr, dmax, fill_value), fill_value)


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def soft_argmin_disparity(cv: CostVolume, temperature: float = 1.0) -> DisparityField:
    """Softmax expectation of the disparity index (scores are similarities)."""
    if not temperature > 0:
        raise RangeError("temperature must be > 0")
    p = softmax(cv.scores.astype(np.float64) / temperature, axis=2)
    disp = p @ np.arange(cv.dmax, dtype=np.float64)
    disp = np.clip(disp, 0.0, cv.dmax - 1)
    return DisparityField(Grid2D(disp), np.ones(disp.shape, dtype=bool))


def ambiguity_uncertainty(cv: CostVolume) -> UncertaintyField:
    """Negative top-2 score margin per pixel.

    Only in-range candidates compete; a pixel with a single candidate (the
    leftmost column) is maximally ambiguous, U = 0.
    """
    scores = cv.scores.astype(np.float64)
    masked = np.where(cv.in_range()[None, :, :], scores, -np.inf)
    top2 = -np.partition(-masked, 1, axis=2)[:, :, :2]
    margin = top2[:, :, 0] - top2[:, :, 1]
    margin = np.where(np.isfinite(margin), margin, 0.0)
    return UncertaintyField.from_array(-margin)
