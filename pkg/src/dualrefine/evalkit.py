"""Stereo evaluation: EPE, BP-X and D1 over NOC / OCC / ALL regions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .field_core import DisparityField

DEFAULT_BP_THRESHOLDS = (1.0, 2.0, 3.0)
D1_PIXELS = 3.0
D1_RELATIVE = 0.05
REGIONS = ("NOC", "OCC", "ALL")


@dataclass
class RegionStats:
    count: int
    epe: float
    bp: dict
    d1: float

    def as_dict(self):
        return {"count": self.count, "epe": self.epe,
                "bp": {_fmt(t): v for t, v in self.bp.items()}, "d1": self.d1}


@dataclass
class MetricsReport:
    """``region`` maps NOC/OCC/ALL to :class:`RegionStats`, or to None when
    the region has no evaluable pixel. Top-level figures mirror ALL."""

    region: dict = field(default_factory=dict)

    @property
    def epe(self):
        return self.region["ALL"].epe if self.region.get("ALL") else None

    @property
    def bp(self):
        return self.region["ALL"].bp if self.region.get("ALL") else {}

    @property
    def d1(self):
        return self.region["ALL"].d1 if self.region.get("ALL") else None

    @property
    def counts(self):
        return {name: (s.count if s else 0) for name, s in self.region.items()}

    def as_dict(self):
        return {name: (s.as_dict() if s else None) for name, s in self.region.items()}

    def to_table(self) -> str:
        """Flat ``key value`` lines, e.g. ``NOC.bp2 0.0132``."""
        lines = []
        for name in REGIONS:
            stats = self.region.get(name)
            if stats is None:
                lines.append(f"{name}.count 0")
                continue
            lines.append(f"{name}.count {stats.count}")
            lines.append(f"{name}.epe {stats.epe:.6f}")
            for t, v in stats.bp.items():
                lines.append(f"{name}.bp{_fmt(t)} {v:.6f}")
            lines.append(f"{name}.d1 {stats.d1:.6f}")
        return "\n".join(lines)


def _fmt(t):
    return f"{t:g}"


def _stats(err, gt, thresholds):
    if err.size == 0:
        return None
    bp = {float(t): float(np.mean(err > t)) for t in thresholds}
    d1 = float(np.mean((err > D1_PIXELS) & (err > D1_RELATIVE * gt)))
    return RegionStats(int(err.size), float(err.mean()), bp, d1)


def compute_metrics(d_pred: DisparityField, d_gt: DisparityField, occ_mask=None,
                    bp_thresholds=DEFAULT_BP_THRESHOLDS) -> MetricsReport:
    """Metrics over pixels valid in ``d_gt``; thresholds use strict ``>``.

    Predictions flagged invalid are scored as they stand (their stored value),
    so a method cannot improve its numbers by abstaining.
    """
    if d_pred.shape != d_gt.shape:
        raise ShapeError(f"prediction {d_pred.shape} and ground truth {d_gt.shape} differ")
    occ = np.zeros(d_gt.shape, dtype=bool) if occ_mask is None else np.asarray(occ_mask, dtype=bool)
    if occ.shape != d_gt.shape:
        raise ShapeError(f"occlusion mask {occ.shape} does not match {d_gt.shape}")
    gt = d_gt.values.astype(np.float64)
    err = np.abs(d_pred.values.astype(np.float64) - gt)
    valid = d_gt.valid
    masks = {"NOC": valid & ~occ, "OCC": valid & occ, "ALL": valid}
    return MetricsReport({name: _stats(err[m], gt[m], bp_thresholds) for name, m in masks.items()})


def aggregate(reports: list) -> MetricsReport:
    """Pixel-weighted pooling of several reports, region by region."""
    pooled = {}
    for name in REGIONS:
        parts = [r.region.get(name) for r in reports if r.region.get(name)]
        if not parts:
            pooled[name] = None
            continue
        n = sum(p.count for p in parts)
        thresholds = parts[0].bp.keys()
        pooled[name] = RegionStats(
            n,
            sum(p.epe * p.count for p in parts) / n,
            {t: sum(p.bp[t] * p.count for p in parts) / n for t in thresholds},
            sum(p.d1 * p.count for p in parts) / n,
        )
    return MetricsReport(pooled)
