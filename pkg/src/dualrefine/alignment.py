"""KNN scale-and-shift alignment anchored on low-uncertainty pixels.

Each anchor fits ``s * d_next + t ~ d_prev`` over its K nearest fellow
anchors with inverse-distance weights and applies its own fit at itself;
every other pixel uses the mean of the per-anchor fits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyDomainError, RangeError, ShapeError
from .field_core import DisparityField, Grid2D, UncertaintyField
from .uncertainty import AnchorSet, select_anchors

DEFAULT_K = 8
DEFAULT_THETA = 30.0
WEIGHT_EPS = 1e-6
DEGENERATE_VAR = 1e-9
MIN_SCALE = 1e-6          # slopes at or below this are round-off around 0
_CHUNK = 1024


@dataclass(frozen=True)
class ScaleShift:
    s: float
    t: float

    def apply(self, d):
        return self.s * np.asarray(d, dtype=np.float64) + self.t


@dataclass(frozen=True, eq=False)
class NeighborSet:
    """``pixels[i] = (row, col)``, sorted by distance then row-major index."""

    pixels: np.ndarray
    distances: np.ndarray
    weights: np.ndarray

    @property
    def K(self) -> int:
        return len(self.pixels)


def _neighbor_indices(anchor_rc: np.ndarray, query_rc: np.ndarray, K: int,
                      exclude_self: bool = True) -> np.ndarray:
    """Indices into ``anchor_rc`` of the K nearest anchors for each query.

    Squared pixel distances are integers, so ``dist2 * n + index`` is an
    exact, unique sort key that breaks ties row-major (anchors arrive in
    row-major order).
    """
    n = len(anchor_rc)
    k = min(K, n)
    anchors = anchor_rc.astype(np.int64)
    index = np.arange(n, dtype=np.int64)
    big = np.iinfo(np.int64).max
    out = np.empty((len(query_rc), k), dtype=np.int64)
    for start in range(0, len(query_rc), _CHUNK):
        q = query_rc[start:start + _CHUNK].astype(np.int64)
        dr = q[:, None, 0] - anchors[None, :, 0]
        dc = q[:, None, 1] - anchors[None, :, 1]
        dist2 = dr * dr + dc * dc
        key = dist2 * n + index[None, :]
        if exclude_self:
            key[dist2 == 0] = big
        if k < n:
            part = np.argpartition(key, k - 1, axis=1)[:, :k]
        else:
            part = np.broadcast_to(index, key.shape).copy()
        part_keys = np.take_along_axis(key, part, axis=1)
        out[start:start + _CHUNK] = np.take_along_axis(part, np.argsort(part_keys, axis=1), axis=1)
    return out


def inverse_distance_weights(distances: np.ndarray) -> np.ndarray:
    w = 1.0 / (np.asarray(distances, dtype=np.float64) + WEIGHT_EPS)
    return w / w.sum(axis=-1, keepdims=True)


def knn_neighbors(anchors: AnchorSet, p, K: int = DEFAULT_K) -> NeighborSet:
    """K nearest anchors to pixel ``p = (row, col)``, never ``p`` itself."""
    if K < 1:
        raise RangeError("K must be >= 1")
    pool = anchors.pixels
    p = np.asarray(p, dtype=np.int64).reshape(1, 2)
    is_self = np.all(pool == p, axis=1)
    pool = pool[~is_self]
    if len(pool) == 0:
        raise EmptyDomainError("no anchor available besides the query pixel")
    idx = _neighbor_indices(pool, p, K, exclude_self=False)[0]
    chosen = pool[idx]
    dist = np.sqrt(((chosen - p) ** 2).sum(axis=1).astype(np.float64))
    return NeighborSet(chosen, dist, inverse_distance_weights(dist))


def _fit_batch(x: np.ndarray, y: np.ndarray, w: np.ndarray):
    """Row-wise weighted least squares for ``s * x + t ~ y`` (weights sum to 1).

    Rows whose weighted variance of x is below ``DEGENERATE_VAR``, or whose
    slope is not clearly positive (<= MIN_SCALE), fall back to ``s = 1`` with a shift-only fit.
    """
    mx = (w * x).sum(axis=1)
    my = (w * y).sum(axis=1)
    cx = x - mx[:, None]
    var = (w * cx * cx).sum(axis=1)
    cov = (w * cx * (y - my[:, None])).sum(axis=1)
    ok = var >= DEGENERATE_VAR
    s = np.where(ok, cov / np.where(ok, var, 1.0), 1.0)
    ok &= s > MIN_SCALE
    s = np.where(ok, s, 1.0)
    t = np.where(ok, my - s * mx, (w * (y - x)).sum(axis=1))
    return s, t


def fit_scale_shift(x, y, w) -> ScaleShift:
    """Closed-form minimiser of ``sum w_i (s x_i + t - y_i)^2``."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    w = np.asarray(w, dtype=np.float64).ravel()
    if x.size == 0:
        raise EmptyDomainError("cannot fit scale and shift to zero samples")
    if not (x.size == y.size == w.size):
        raise ShapeError("x, y and w must have equal length")
    if np.any(w <= 0):
        raise RangeError("weights must be positive")
    s, t = _fit_batch(x[None, :], y[None, :], (w / w.sum())[None, :])
    return ScaleShift(float(s[0]), float(t[0]))


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    aligned: DisparityField
    anchors: AnchorSet
    local: np.ndarray          # (n_anchors, 2) columns s, t
    global_fit: ScaleShift

    def __iter__(self):
        yield self.aligned
        yield [ScaleShift(float(s), float(t)) for s, t in self.local]
        yield self.global_fit


def lu_kss(d_next: DisparityField, d_prev: DisparityField, U: UncertaintyField,
           theta: float = DEFAULT_THETA, K: int = DEFAULT_K, subsample: int | None = None,
           seed: int = 0) -> AlignmentResult:
    """Align ``d_next`` to ``d_prev`` with local anchor fits and their mean.

    ``subsample`` optionally averages the global fit over a seeded uniform
    subset of that many anchors instead of all of them.
    """
    if d_next.shape != d_prev.shape or d_next.shape != U.shape:
        raise ShapeError("d_next, d_prev and U must share a shape")
    if K < 1:
        raise RangeError("K must be >= 1")
    anchors = select_anchors(U, theta)
    rc = anchors.pixels
    if len(rc) < 2:
        raise EmptyDomainError("alignment needs at least two anchors")
    nxt = d_next.values.astype(np.float64)
    prev = d_prev.values.astype(np.float64)

    nbr = _neighbor_indices(rc, rc, K)
    nbr_rc = rc[nbr]
    dist = np.sqrt(((nbr_rc - rc[:, None, :]) ** 2).sum(axis=2).astype(np.float64))
    w = inverse_distance_weights(dist)
    x = nxt[nbr_rc[..., 0], nbr_rc[..., 1]]
    y = prev[nbr_rc[..., 0], nbr_rc[..., 1]]
    s, t = _fit_batch(x, y, w)

    if subsample is not None and subsample < len(rc):
        pick = np.sort(np.random.default_rng(seed).choice(len(rc), subsample, replace=False))
    else:
        pick = np.arange(len(rc))
    s_star = float(np.add.reduce(s[pick]) / len(pick))
    t_star = float(np.add.reduce(t[pick]) / len(pick))

    out = s_star * nxt + t_star
    out[rc[:, 0], rc[:, 1]] = s * nxt[rc[:, 0], rc[:, 1]] + t
    out = np.where(d_next.valid, np.maximum(out, 0.0), 0.0)
    aligned = DisparityField(Grid2D(out), d_next.valid)
    return AlignmentResult(aligned, anchors, np.stack([s, t], axis=1), ScaleShift(s_star, t_star))
