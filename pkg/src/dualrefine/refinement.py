"""Iterative refinement with a deterministic stand-in for the recurrent
update block.

Each step pulls the disparity toward the local correlation peak (soft
argmax over a window of the cost volume around the current estimate) and,
in proportion to the pixel's uncertainty rank, toward a cognition-driven
offset; the result is then re-aligned to the previous iterate.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
from scipy.stats import rankdata

from .alignment import lu_kss
from .cognition import random_projections, toy_cognition_features, ugsca
from .errors import RangeError, ShapeError
from .field_core import DisparityField, FeatureMap, Grid2D, UncertaintyField
from .matching import (
    CostVolume,
    ambiguity_uncertainty,
    build_cost_volume,
    soft_argmin_disparity,
    softmax,
    toy_featurize,
)
from .scene import SceneSample
from .uncertainty import adapter_forward, random_adapter_weights

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RefineConfig:
    iterations: int = 8
    radius: int = 12
    theta: float = 30.0
    K: int = 8
    alpha_floor: float = 0.0
    alpha_ceiling: float = 0.3
    temperature: float = 0.01
    sc_gain: float = 0.2
    dmax: int = 32
    feature_radius: int = 2
    init_temperature: float = 0.005
    cognition_dim: int = 8
    uncertainty: str = "ambiguity"     # or "adapter"
    align: bool = True
    recompute_sc: bool = False
    seed: int = 42
    drift: tuple | None = None         # (s, t) injected before each alignment

    def __post_init__(self):
        if self.iterations < 1:
            raise RangeError("iterations must be >= 1")
        if self.radius < 1:
            raise RangeError("lookup radius must be >= 1")
        if not 0 <= self.alpha_floor <= self.alpha_ceiling <= 1:
            raise RangeError("need 0 <= alpha_floor <= alpha_ceiling <= 1")
        if self.temperature <= 0 or self.init_temperature <= 0:
            raise RangeError("temperatures must be > 0")
        if not 0 < self.theta <= 100:
            raise RangeError("theta must lie in (0, 100]")
        if self.K < 1:
            raise RangeError("K must be >= 1")
        if self.uncertainty not in ("ambiguity", "adapter"):
            raise RangeError(f"unknown uncertainty source {self.uncertainty!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "RefineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise RangeError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if data.get("drift") is not None:
            data["drift"] = tuple(data["drift"])
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    def with_overrides(self, **kw) -> "RefineConfig":
        return replace(self, **kw)


@dataclass
class RefineTrajectory:
    fields: list
    epe: list = field(default_factory=list)
    alignment: list = field(default_factory=list)   # per iteration: dict(s, t, anchors)
    uncertainty: UncertaintyField | None = None

    @property
    def final(self) -> DisparityField:
        return self.fields[-1]


def sample_cost(cv: CostVolume, positions: np.ndarray) -> np.ndarray:
    """Linear interpolation of ``cv`` along the disparity axis.

    ``positions`` has shape (H, W, n); positions outside [0, dmax-1] read
    the fill value.
    """
    scores = cv.scores.astype(np.float64)
    top = cv.dmax - 1
    pos = np.clip(positions, 0.0, top)
    k0 = np.minimum(np.floor(pos).astype(np.intp), top - 1)
    frac = pos - k0
    lo = np.take_along_axis(scores, k0, axis=2)
    hi = np.take_along_axis(scores, k0 + 1, axis=2)
    out = (1.0 - frac) * lo + frac * hi
    outside = (positions < 0) | (positions > top)
    return np.where(outside, cv.fill_value, out)


def correlation_offset(d: np.ndarray, cv: CostVolume, radius: int, temperature: float) -> np.ndarray:
    """Soft-argmax offset over the window ``d + j``, ``j = -radius..radius``."""
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    window = sample_cost(cv, d[:, :, None] + offsets)
    return softmax(window / temperature, axis=2) @ offsets


def uncertainty_blend(U: UncertaintyField, floor: float, ceiling: float) -> np.ndarray:
    """Map U's ranks (ties averaged) linearly onto [floor, ceiling]."""
    u = U.values.astype(np.float64)
    n = u.size
    if n == 1 or ceiling == floor:
        return np.full(u.shape, floor + (ceiling - floor) * (0.5 if n > 1 else 0.0))
    ranks = rankdata(u.ravel(), method="average").reshape(u.shape)
    return floor + (ceiling - floor) * (ranks - 1.0) / (n - 1.0)


def principal_channel(F: FeatureMap) -> np.ndarray:
    """First principal component score of the channels, standardised.

    The sign is fixed by making the largest-magnitude loading positive.
    A constant map yields zeros.
    """
    x = F.values.astype(np.float64).reshape(-1, F.channels)
    x = x - x.mean(axis=0)
    if not np.any(x):
        return np.zeros((F.height, F.width))
    _, _, vt = np.linalg.svd(x, full_matrices=False)
    v = vt[0]
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    score = x @ v
    std = score.std()
    if std < 1e-12:
        return np.zeros((F.height, F.width))
    return ((score - score.mean()) / std).reshape(F.height, F.width)


def refine_step(d: DisparityField, cv: CostVolume, U: UncertaintyField, Fsc: FeatureMap,
                cfg: RefineConfig) -> DisparityField:
    if d.shape != (cv.height, cv.width) or U.shape != d.shape or (Fsc.height, Fsc.width) != d.shape:
        raise ShapeError("disparity, cost volume, uncertainty and F_sc must share H x W")
    cur = d.values.astype(np.float64)
    delta_corr = correlation_offset(cur, cv, cfg.radius, cfg.temperature)
    delta_sc = cfg.sc_gain * principal_channel(Fsc)
    alpha = uncertainty_blend(U, cfg.alpha_floor, cfg.alpha_ceiling)
    new = cur + (1.0 - alpha) * delta_corr + alpha * delta_sc
    return d.replace(np.clip(new, 0.0, cv.dmax - 1))


def _epe(d: DisparityField, gt: DisparityField) -> float:
    m = d.valid & gt.valid
    return float(np.abs(d.values.astype(np.float64) - gt.values.astype(np.float64))[m].mean())


@dataclass(frozen=True, eq=False)
class PipelineInputs:
    cv: CostVolume
    U: UncertaintyField
    cognition: FeatureMap


def prepare(left: Grid2D, right: Grid2D, cfg: RefineConfig,
            cognition: FeatureMap | None = None) -> PipelineInputs:
    if left.shape != right.shape:
        raise ShapeError(f"left {left.shape} and right {right.shape} differ")
    Fl = toy_featurize(left, cfg.feature_radius)
    Fr = toy_featurize(right, cfg.feature_radius)
    cv = build_cost_volume(Fl, Fr, cfg.dmax)
    if cfg.uncertainty == "adapter":
        U = adapter_forward(cv, random_adapter_weights(cfg.dmax, seed=cfg.seed))
    else:
        U = ambiguity_uncertainty(cv)
    if cognition is None:
        cognition = toy_cognition_features(left, cfg.cognition_dim)
    return PipelineInputs(cv, U, cognition)


def run_refinement(pair, cfg: RefineConfig = RefineConfig(), d_init: DisparityField | None = None,
                   d_gt: DisparityField | None = None, cognition: FeatureMap | None = None,
                   inputs: PipelineInputs | None = None) -> RefineTrajectory:
    """Run ``cfg.iterations`` refine-then-align steps.

    ``pair`` is a :class:`SceneSample` (its ground truth is used for the
    EPE trace unless ``d_gt`` is given) or a ``(left, right)`` tuple.
    """
    if isinstance(pair, SceneSample):
        left, right = pair.left, pair.right
        d_gt = pair.d_gt if d_gt is None else d_gt
    else:
        left, right = pair
    if inputs is None:
        inputs = prepare(left, right, cfg, cognition)
    cv, U = inputs.cv, inputs.U
    if inputs.cognition.channels != cfg.cognition_dim:
        raise ShapeError(
            f"cognition features have {inputs.cognition.channels} channels, config expects {cfg.cognition_dim}"
        )
    proj = random_projections(cfg.cognition_dim, seed=cfg.seed)
    fsc = ugsca(U, inputs.cognition, proj)

    d = soft_argmin_disparity(cv, cfg.init_temperature) if d_init is None else d_init
    traj = RefineTrajectory([d], uncertainty=U)
    if d_gt is not None:
        traj.epe.append(_epe(d, d_gt))
    for k in range(1, cfg.iterations + 1):
        if cfg.recompute_sc and k > 1:
            fsc = ugsca(U, inputs.cognition, proj)
        nxt = refine_step(d, cv, U, fsc, cfg)
        if cfg.drift is not None:
            s0, t0 = cfg.drift
            nxt = nxt.replace(np.maximum(s0 * nxt.values.astype(np.float64) + t0, 0.0))
        if cfg.align:
            res = lu_kss(nxt, d, U, cfg.theta, cfg.K)
            nxt = res.aligned.replace(np.clip(res.aligned.values, 0.0, cv.dmax - 1))
            traj.alignment.append({"s": res.global_fit.s, "t": res.global_fit.t,
                                   "anchors": len(res.anchors)})
        d = nxt
        traj.fields.append(d)
        if d_gt is not None:
            traj.epe.append(_epe(d, d_gt))
            logger.debug("iteration %d: EPE %.4f", k, traj.epe[-1])
    return traj
