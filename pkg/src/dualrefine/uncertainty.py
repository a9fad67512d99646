"""Log-variance adapter over the cost volume, the heteroscedastic residual
loss, percentile anchor selection and the uncertainty-masking sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyDomainError, RangeError, ShapeError
from .field_core import DisparityField, UncertaintyField
from .matching import CostVolume
from .prng import XorShift64Star

DEFAULT_HIDDEN = 16
DEFAULT_WEIGHT_SEED = 42


@dataclass(frozen=True, eq=False)
class AdapterWeights:
    """Two 3x3 convolutions. Kernels are laid out ``(ky, kx, c_in, c_out)``."""

    conv1: np.ndarray
    bias1: np.ndarray
    conv2: np.ndarray
    bias2: np.ndarray

    def __post_init__(self):
        conv1 = np.asarray(self.conv1, dtype=np.float64)
        conv2 = np.asarray(self.conv2, dtype=np.float64)
        bias1 = np.asarray(self.bias1, dtype=np.float64).reshape(-1)
        bias2 = np.asarray(self.bias2, dtype=np.float64).reshape(-1)
        if conv1.ndim != 4 or conv1.shape[:2] != (3, 3):
            raise ShapeError(f"conv1 must be (3, 3, in, hidden), got {conv1.shape}")
        hidden = conv1.shape[3]
        if conv2.shape != (3, 3, hidden, 1):
            raise ShapeError(f"conv2 must be (3, 3, {hidden}, 1), got {conv2.shape}")
        if bias1.shape != (hidden,) or bias2.shape != (1,):
            raise ShapeError("bias shapes must be (hidden,) and (1,)")
        for arr in (conv1, conv2, bias1, bias2):
            if not np.all(np.isfinite(arr)):
                raise RangeError("adapter weights must be finite")
        for name, arr in (("conv1", conv1), ("conv2", conv2), ("bias1", bias1), ("bias2", bias2)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def in_channels(self) -> int:
        return self.conv1.shape[2]

    @property
    def hidden(self) -> int:
        return self.conv1.shape[3]


def random_adapter_weights(dmax: int, hidden: int = DEFAULT_HIDDEN,
                           seed: int = DEFAULT_WEIGHT_SEED) -> AdapterWeights:
    """Untrained weights drawn uniformly in +-1/sqrt(fan_in)."""
    rng = XorShift64Star(seed)
    b1 = 1.0 / math.sqrt(9 * dmax)
    b2 = 1.0 / math.sqrt(9 * hidden)
    return AdapterWeights(
        conv1=rng.uniform_array((3, 3, dmax, hidden), -b1, b1),
        bias1=rng.uniform_array((hidden,), -b1, b1),
        conv2=rng.uniform_array((3, 3, hidden, 1), -b2, b2),
        bias2=rng.uniform_array((1,), -b2, b2),
    )


def conv2d_same(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Zero-padded stride-1 convolution (cross-correlation) of an (H, W, Cin)
    array with a (kh, kw, Cin, Cout) kernel; odd kernel sizes only."""
    x = np.asarray(x, dtype=np.float64)
    kh, kw, cin, cout = kernel.shape
    if x.shape[2] != cin:
        raise ShapeError(f"input has {x.shape[2]} channels, kernel expects {cin}")
    h, w = x.shape[:2]
    py, px = kh // 2, kw // 2
    padded = np.pad(x, ((py, py), (px, px), (0, 0)))
    out = np.zeros((h, w, cout))
    for dy in range(kh):
        for dx in range(kw):
            out += padded[dy : dy + h, dx : dx + w, :] @ kernel[dy, dx]
    return out + np.asarray(bias, dtype=np.float64)


def adapter_forward(cv: CostVolume, w: AdapterWeights) -> UncertaintyField:
    """log sigma^2 = conv2(relu(conv1(cost volume as a Dmax-channel image)))."""
    if w.in_channels != cv.dmax:
        raise ShapeError(f"adapter expects {w.in_channels} channels, cost volume has {cv.dmax}")
    hidden = np.maximum(conv2d_same(cv.scores, w.conv1, w.bias1), 0.0)
    out = conv2d_same(hidden, w.conv2, w.bias2)[:, :, 0]
    return UncertaintyField.from_array(out)


def _joint_valid(*fields):
    shape = fields[0].shape
    for f in fields[1:]:
        if f.shape != shape:
            raise ShapeError(f"field shapes differ: {shape} vs {f.shape}")
    valid = np.ones(shape, dtype=bool)
    for f in fields:
        if isinstance(f, DisparityField):
            valid &= f.valid
    return valid


def uncertainty_loss_array(pred, gt, logvar, valid):
    """Mean of 0.5*exp(-s)*r^2 + 0.5*s over ``valid``, in float64."""
    n = int(np.count_nonzero(valid))
    if n == 0:
        raise EmptyDomainError("no pixel is valid in both disparity fields")
    r = np.asarray(pred, dtype=np.float64)[valid] - np.asarray(gt, dtype=np.float64)[valid]
    s = np.asarray(logvar, dtype=np.float64)[valid]
    return float(np.sum(0.5 * np.exp(-s) * r * r + 0.5 * s) / n)


def uncertainty_loss_grad(pred, gt, logvar, valid):
    """Gradients of :func:`uncertainty_loss_array` w.r.t. ``pred`` and ``logvar``."""
    n = int(np.count_nonzero(valid))
    if n == 0:
        raise EmptyDomainError("no pixel is valid in both disparity fields")
    r = np.asarray(pred, dtype=np.float64) - np.asarray(gt, dtype=np.float64)
    inv = np.exp(-np.asarray(logvar, dtype=np.float64))
    g_pred = np.where(valid, inv * r / n, 0.0)
    g_logvar = np.where(valid, (0.5 - 0.5 * inv * r * r) / n, 0.0)
    return g_pred, g_logvar


def uncertainty_loss(d_pred: DisparityField, d_gt: DisparityField,
                     logvar: UncertaintyField) -> float:
    valid = _joint_valid(d_pred, d_gt, logvar)
    return uncertainty_loss_array(d_pred.values, d_gt.values, logvar.values, valid)


@dataclass(frozen=True, eq=False)
class AnchorSet:
    """Reliable pixels, ``pixels[i] = (row, col)`` in row-major order."""

    pixels: np.ndarray
    threshold: float
    theta: float
    shape: tuple

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[self.pixels[:, 0], self.pixels[:, 1]] = True
        return m

    def __len__(self):
        return len(self.pixels)


def nearest_rank_percentile(values, theta: float) -> float:
    """Smallest value with at least ``theta`` percent of the data at or below it."""
    flat = np.sort(np.asarray(values, dtype=np.float64).ravel())
    rank = max(1, math.ceil(theta / 100.0 * flat.size))
    return float(flat[rank - 1])


def select_anchors(U: UncertaintyField, theta: float) -> AnchorSet:
    """Anchors are all pixels with U <= the theta-th nearest-rank percentile."""
    if not 0 < theta <= 100:
        raise RangeError(f"theta must lie in (0, 100], got {theta}")
    tau = nearest_rank_percentile(U.values, theta)
    rows, cols = np.nonzero(U.values.astype(np.float64) <= tau)
    return AnchorSet(np.stack([rows, cols], axis=1), tau, float(theta), U.shape)


def masking_sweep(d_pred: DisparityField, d_gt: DisparityField, U: UncertaintyField,
                  fractions) -> list[tuple[float, float]]:
    """EPE after discarding the ``f`` percent most uncertain pixels.

    The masked count is ``floor(f * n / 100)`` over pixels valid in both
    fields; ties in U are broken row-major (earlier pixel masked first).
    """
    valid = _joint_valid(d_pred, d_gt, U)
    err = np.abs(d_pred.values.astype(np.float64) - d_gt.values.astype(np.float64))[valid]
    u = U.values.astype(np.float64)[valid]
    order = np.argsort(-u, kind="stable")
    n = err.size
    out = []
    for f in fractions:
        if not 0 <= f < 100:
            raise RangeError(f"mask fraction must lie in [0, 100), got {f}")
        m = int(math.floor(f * n / 100.0))
        keep = order[m:]
        if keep.size == 0:
            raise EmptyDomainError(f"masking {f}% leaves no pixels")
        out.append((float(f), float(err[keep].mean())))
    return out
