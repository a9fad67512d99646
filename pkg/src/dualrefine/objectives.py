"""Training objectives and a central-difference gradient checker.

Every loss has an ``*_array`` form taking float64 arrays (what the gradient
checker perturbs) and a field-level wrapper. Reductions are means over the
admissible positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EmptyDomainError, RangeError, SamplingError, ShapeError
from .field_core import DisparityField, UncertaintyField, forward_diff_array
from .uncertainty import (
    _joint_valid,
    uncertainty_loss,
    uncertainty_loss_array,
    uncertainty_loss_grad,
)

DEFAULT_GAMMA = 0.9


def _residual(pred, gt, valid):
    n = int(np.count_nonzero(valid))
    if n == 0:
        raise EmptyDomainError("no pixel is valid in both disparity fields")
    r = np.asarray(pred, dtype=np.float64) - np.asarray(gt, dtype=np.float64)
    return np.where(valid, r, 0.0), n


def smooth_l1_array(pred, gt, valid, beta=1.0):
    r, n = _residual(pred, gt, valid)
    a = np.abs(r)
    per = np.where(a < beta, 0.5 * r * r / beta, a - 0.5 * beta)
    return float(per[valid].sum() / n)


def smooth_l1_grad(pred, gt, valid, beta=1.0):
    r, n = _residual(pred, gt, valid)
    g = np.where(np.abs(r) < beta, r / beta, np.sign(r))
    return np.where(valid, g / n, 0.0)


def l1_array(pred, gt, valid):
    r, n = _residual(pred, gt, valid)
    return float(np.abs(r)[valid].sum() / n)


def l1_grad(pred, gt, valid):
    r, n = _residual(pred, gt, valid)
    return np.where(valid, np.sign(r) / n, 0.0)


def addg_array(pred, gt):
    e = np.asarray(pred, dtype=np.float64) - np.asarray(gt, dtype=np.float64)
    if e.shape[0] < 2 or e.shape[1] < 2:
        raise ShapeError("gradient loss needs height and width >= 2")
    gx = forward_diff_array(e, "x")
    gy = forward_diff_array(e, "y")
    return float((np.abs(gx).sum() + np.abs(gy).sum()) / (gx.size + gy.size))


def addg_grad(pred, gt):
    e = np.asarray(pred, dtype=np.float64) - np.asarray(gt, dtype=np.float64)
    gx = np.sign(forward_diff_array(e, "x"))
    gy = np.sign(forward_diff_array(e, "y"))
    n = gx.size + gy.size
    g = np.zeros_like(e)
    g[:, 1:] += gx
    g[:, :-1] -= gx
    g[1:, :] += gy
    g[:-1, :] -= gy
    return g / n


def smooth_l1_init_loss(d0: DisparityField, d_gt: DisparityField) -> float:
    """Smooth-L1 (beta = 1) on the initial disparity, mean over valid pixels."""
    return smooth_l1_array(d0.values, d_gt.values, _joint_valid(d0, d_gt))


def l1_loss(d: DisparityField, d_gt: DisparityField) -> float:
    return l1_array(d.values, d_gt.values, _joint_valid(d, d_gt))


def addg_loss(d_a: DisparityField, d_gt: DisparityField) -> float:
    """Mean absolute forward difference of the error field, both axes pooled."""
    if d_a.shape != d_gt.shape:
        raise ShapeError(f"field shapes differ: {d_a.shape} vs {d_gt.shape}")
    return addg_array(d_a.values, d_gt.values)


@dataclass
class LossBreakdown:
    init: float
    per_iteration: list = field(default_factory=list)   # (k, weight, l1)
    addg: float = 0.0
    uncertainty: float = 0.0
    total: float = 0.0

    def as_dict(self):
        return {
            "init": self.init,
            "per_iteration": [
                {"k": k, "weight": w, "l1": v} for k, w, v in self.per_iteration
            ],
            "addg": self.addg,
            "uncertainty": self.uncertainty,
            "total": self.total,
        }


def iteration_weights(n: int, gamma: float = DEFAULT_GAMMA) -> list[float]:
    """``gamma ** (N - k)`` for k = 1..N."""
    return [gamma ** (n - k) for k in range(1, n + 1)]


def total_loss(d0: DisparityField, aligned: list, d_gt: DisparityField,
               logvar: UncertaintyField, gamma: float = DEFAULT_GAMMA) -> LossBreakdown:
    if not aligned:
        raise EmptyDomainError("total loss needs at least one aligned iterate")
    if not 0 < gamma <= 1:
        raise RangeError(f"gamma must lie in (0, 1], got {gamma}")
    init = smooth_l1_init_loss(d0, d_gt)
    weights = iteration_weights(len(aligned), gamma)
    per = [(k, w, l1_loss(d, d_gt)) for k, (w, d) in enumerate(zip(weights, aligned), start=1)]
    final = aligned[-1]
    addg = addg_loss(final, d_gt)
    unc = uncertainty_loss(final, d_gt, logvar)
    total = init + sum(w * v for _, w, v in per) + addg + unc
    return LossBreakdown(init, per, addg, unc, total)


# -- gradient checking ------------------------------------------------------

@dataclass
class GradProblem:
    """A scalar loss of one float64 array with its analytic gradient.

    ``admissible(point, h)`` flags coordinates whose central difference with
    step ``h`` stays on one smooth piece of the loss.
    """

    name: str
    loss: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    point: np.ndarray
    admissible: Callable[[np.ndarray, float], np.ndarray]


def _kink_margin(h):
    return 10.0 * h


def make_problem(name: str, seed: int = 0, shape=(16, 16)) -> GradProblem:
    """Random evaluation point for one of the package losses.

    ``name`` is one of ``uncertainty``, ``smooth_l1``, ``l1``, ``addg``,
    ``quadratic``.
    """
    rng = np.random.default_rng(seed)
    gt = rng.uniform(0.0, 20.0, shape)
    valid = np.ones(shape, dtype=bool)
    if name == "uncertainty":
        logvar = rng.uniform(-1.0, 1.0, shape)
        point = gt + rng.normal(0.0, 2.0, shape)
        return GradProblem(
            name,
            lambda d: uncertainty_loss_array(d, gt, logvar, valid),
            lambda d: uncertainty_loss_grad(d, gt, logvar, valid)[0],
            point,
            lambda d, h: np.ones(d.shape, dtype=bool),
        )
    if name == "smooth_l1":
        point = gt + rng.uniform(-3.0, 3.0, shape)

        def ok(d, h):
            a = np.abs(d - gt)
            m = _kink_margin(h)
            return (np.abs(a - 1.0) > m) & (a > m)

        return GradProblem(name, lambda d: smooth_l1_array(d, gt, valid),
                           lambda d: smooth_l1_grad(d, gt, valid), point, ok)
    if name == "l1":
        point = gt + rng.uniform(-3.0, 3.0, shape)
        return GradProblem(name, lambda d: l1_array(d, gt, valid),
                           lambda d: l1_grad(d, gt, valid), point,
                           lambda d, h: np.abs(d - gt) > _kink_margin(h))
    if name == "addg":
        point = gt + rng.uniform(-3.0, 3.0, shape)

        def ok(d, h):
            e = d - gt
            m = _kink_margin(h)
            good = np.ones(e.shape, dtype=bool)
            gx = np.abs(forward_diff_array(e, "x")) > m
            gy = np.abs(forward_diff_array(e, "y")) > m
            good[:, 1:] &= gx
            good[:, :-1] &= gx
            good[1:, :] &= gy
            good[:-1, :] &= gy
            return good

        return GradProblem(name, lambda d: addg_array(d, gt), lambda d: addg_grad(d, gt), point, ok)
    if name == "quadratic":
        point = gt + rng.normal(0.0, 2.0, shape)
        return GradProblem(name, lambda d: float(0.5 * np.sum((d - gt) ** 2)),
                           lambda d: d - gt, point, lambda d, h: np.ones(d.shape, dtype=bool))
    raise ValueError(f"unknown loss {name!r}")


LOSS_NAMES = ("uncertainty", "smooth_l1", "l1", "addg", "quadratic")


def relative_error(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def grad_check(problem: GradProblem, samples: int = 100, step: float = 1e-3,
               seed: int = 0, return_count: bool = False):
    """Max relative error between analytic and central-difference gradients.

    ``samples`` distinct coordinates are drawn among the admissible ones.
    """
    point = np.array(problem.point, dtype=np.float64)
    admissible = np.flatnonzero(problem.admissible(point, step))
    if admissible.size == 0:
        raise SamplingError(f"every coordinate of {problem.name!r} sits on a kink")
    rng = np.random.default_rng(seed)
    picks = rng.choice(admissible, size=min(samples, admissible.size), replace=False)
    analytic = problem.grad(point).ravel()
    worst = 0.0
    flat = point.ravel()
    for i in picks:
        orig = flat[i]
        flat[i] = orig + step
        up = problem.loss(point)
        flat[i] = orig - step
        down = problem.loss(point)
        flat[i] = orig
        numeric = (up - down) / (2.0 * step)
        worst = max(worst, relative_error(float(analytic[i]), numeric))
    if return_count:
        return worst, int(picks.size)
    return worst
