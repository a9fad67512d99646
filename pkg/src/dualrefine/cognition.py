"""Spatial-cognition features and uncertainty-guided cross attention.

Queries come from the uncertainty map (lifted to ``d`` channels by a small
convolution), keys and values from the cognition features; attention is
global over all pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RangeError, ShapeError, SizeError
from .field_core import FeatureMap, Grid2D, UncertaintyField
from .prng import XorShift64Star
from .uncertainty import conv2d_same

MAX_POSITIONS = 16384
_QUERY_CHUNK = 512


@dataclass(frozen=True, eq=False)
class SCAProjections:
    """``q_conv`` is (k, k, 1, d) with k odd (3 by default, 1 allowed);
    ``wq``/``wk``/``wv`` are d x d and act on row vectors (``x @ W``)."""

    q_conv: np.ndarray
    q_bias: np.ndarray
    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray

    def __post_init__(self):
        arrays = {name: np.asarray(getattr(self, name), dtype=np.float64)
                  for name in ("q_conv", "q_bias", "wq", "wk", "wv")}
        q_conv = arrays["q_conv"]
        if q_conv.ndim != 4 or q_conv.shape[0] != q_conv.shape[1] or q_conv.shape[0] % 2 == 0:
            raise ShapeError(f"q_conv must be (k, k, 1, d) with k odd, got {q_conv.shape}")
        if q_conv.shape[2] != 1:
            raise ShapeError("q_conv lifts a single-channel map")
        d = q_conv.shape[3]
        arrays["q_bias"] = arrays["q_bias"].reshape(-1)
        if arrays["q_bias"].shape != (d,):
            raise ShapeError(f"q_bias must have {d} entries")
        for name in ("wq", "wk", "wv"):
            if arrays[name].shape != (d, d):
                raise ShapeError(f"{name} must be {d}x{d}, got {arrays[name].shape}")
        for name, arr in arrays.items():
            if not np.all(np.isfinite(arr)):
                raise RangeError(f"{name} must be finite")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def d(self) -> int:
        return self.q_conv.shape[3]


def random_projections(d: int, seed: int = 42, kernel: int = 3) -> SCAProjections:
    rng = XorShift64Star(seed)
    bc = 1.0 / kernel
    bw = 1.0 / math.sqrt(d)
    return SCAProjections(
        q_conv=rng.uniform_array((kernel, kernel, 1, d), -bc, bc),
        q_bias=rng.uniform_array((d,), -bc, bc),
        wq=rng.uniform_array((d, d), -bw, bw),
        wk=rng.uniform_array((d, d), -bw, bw),
        wv=rng.uniform_array((d, d), -bw, bw),
    )


def _box_mean(img: np.ndarray, radius: int) -> np.ndarray:
    """Edge-clamped (2r+1)^2 box average via a summed-area table."""
    h, w = img.shape
    padded = np.pad(img, radius, mode="edge")
    sat = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1))
    sat[1:, 1:] = padded.cumsum(0).cumsum(1)
    size = 2 * radius + 1
    total = sat[size:size + h, size:size + w] - sat[:h, size:size + w] - sat[size:size + h, :w] + sat[:h, :w]
    return total / (size * size)


def toy_cognition_features(image: Grid2D, d: int) -> FeatureMap:
    """Deterministic stand-in for monocular-backbone features.

    Base channels, in order: min-max normalised intensity (0 for a constant
    image), column / (W-1), row / (H-1), then box means of the normalised
    intensity with radii 1, 2 and 4. The list is tiled and truncated to ``d``.
    """
    if d < 1:
        raise RangeError("d must be >= 1")
    img = image.values.astype(np.float64)
    h, w = img.shape
    lo, hi = img.min(), img.max()
    norm = (img - lo) / (hi - lo) if hi > lo else np.zeros_like(img)
    cols = np.broadcast_to(np.arange(w) / max(w - 1, 1), (h, w))
    rows = np.broadcast_to((np.arange(h) / max(h - 1, 1))[:, None], (h, w))
    base = [norm, cols, rows] + [_box_mean(norm, r) for r in (1, 2, 4)]
    return FeatureMap(np.stack([base[c % len(base)] for c in range(d)], axis=2))


def _qkv(U: UncertaintyField, F: FeatureMap, proj: SCAProjections):
    if F.channels != proj.d:
        raise ShapeError(f"feature channels {F.channels} != projection width {proj.d}")
    if U.shape != (F.height, F.width):
        raise ShapeError(f"uncertainty shape {U.shape} != feature shape {(F.height, F.width)}")
    n = F.height * F.width
    if n > MAX_POSITIONS:
        raise SizeError(f"global attention over {n} positions exceeds the {MAX_POSITIONS} limit")
    lifted = conv2d_same(U.values[:, :, None], proj.q_conv, proj.q_bias)
    feats = F.values.astype(np.float64).reshape(n, proj.d)
    q = lifted.reshape(n, proj.d) @ proj.wq
    k = feats @ proj.wk
    v = feats @ proj.wv
    return q, k, v


def attention_logits(U: UncertaintyField, F: FeatureMap, proj: SCAProjections) -> np.ndarray:
    """Full (HW, HW) scaled dot-product logits; for inspection on small maps."""
    q, k, _ = _qkv(U, F, proj)
    return q @ k.T / math.sqrt(proj.d)


def attention_weights(U: UncertaintyField, F: FeatureMap, proj: SCAProjections) -> np.ndarray:
    logits = attention_logits(U, F, proj)
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def projected_values(F: FeatureMap, proj: SCAProjections) -> np.ndarray:
    return F.values.astype(np.float64).reshape(-1, proj.d) @ proj.wv


def ugsca(U: UncertaintyField, F: FeatureMap, proj: SCAProjections) -> FeatureMap:
    """Uncertainty-conditioned attention; returns an H x W x d map.

    Keys and values are reduced in a content-defined order (lexicographic
    over the key/value rows), so re-enumerating the pixels permutes the
    output without changing a single bit.
    """
    q, k, v = _qkv(U, F, proj)
    order = np.lexsort(np.concatenate([k, v], axis=1).T[::-1])
    k, v = k[order], v[order]
    n = q.shape[0]
    scale = math.sqrt(proj.d)
    out = np.empty((n, proj.d))
    for start in range(0, n, _QUERY_CHUNK):
        logits = q[start:start + _QUERY_CHUNK] @ k.T / scale
        e = np.exp(logits - logits.max(axis=1, keepdims=True))
        out[start:start + _QUERY_CHUNK] = (e @ v) / e.sum(axis=1, keepdims=True)
    return FeatureMap(out.reshape(F.height, F.width, proj.d))
