"""Loss arithmetic and central-difference gradients."""

import math

import numpy as np

from . import ref
from .registry import fixture

STEP = 1e-3


def _addg(pred, gt):
    e = [[p - g for p, g in zip(pr, gr)] for pr, gr in zip(pred, gt)]
    h, w = len(e), len(e[0])
    terms = [abs(e[i][j + 1] - e[i][j]) for i in range(h) for j in range(w - 1)]
    terms += [abs(e[i + 1][j] - e[i][j]) for i in range(h - 1) for j in range(w)]
    return sum(terms) / len(terms)


def _addg_inputs():
    return {"pred": [[0.0, 1.0], [2.0, 3.0]], "gt": [[0.0, 0.0], [0.0, 0.0]]}


@fixture("objectives.addg_2x2", 1e-12, "forward differences on both axes, mean over all terms",
         _addg_inputs)
def addg_2x2(inp):
    return {"addg": _addg(inp["pred"], inp["gt"])}


def _flat(a):
    return [v for row in a for v in row]


def _smooth_l1(pred, gt):
    r = [p - g for p, g in zip(_flat(pred), _flat(gt))]
    return sum(0.5 * v * v if abs(v) < 1 else abs(v) - 0.5 for v in r) / len(r)


def _l1(pred, gt):
    r = [p - g for p, g in zip(_flat(pred), _flat(gt))]
    return sum(abs(v) for v in r) / len(r)


def _unc(pred, gt, logvar):
    terms = [0.5 * math.exp(-s) * (p - g) ** 2 + 0.5 * s
             for p, g, s in zip(_flat(pred), _flat(gt), _flat(logvar))]
    return sum(terms) / len(terms)


def _breakdown_inputs():
    # fields hold 32-bit values, so the iterate is given as its float32 rounding
    last = [[ref.f32(v) for v in row] for row in [[1.2, 2.2], [3.4, 0.6]]]
    return {"d0": [[1.0, 2.5], [4.0, 0.5]],
            "aligned": [[[1.5, 2.0], [3.0, 1.0]], last],
            "gt": [[1.0, 2.0], [3.0, 1.0]],
            "logvar": [[0.0, 0.5], [-0.5, 1.0]],
            "gamma": 0.9}


@fixture("objectives.breakdown_2x2", 1e-12,
         "smooth-L1 init + gamma^(N-k) weighted L1 per iterate + ADDG and uncertainty on the last iterate",
         _breakdown_inputs)
def breakdown_2x2(inp):
    gt, aligned, n = inp["gt"], inp["aligned"], len(inp["aligned"])
    init = _smooth_l1(inp["d0"], gt)
    per = [[k, inp["gamma"] ** (n - k), _l1(d, gt)] for k, d in enumerate(aligned, start=1)]
    addg = _addg(aligned[-1], gt)
    unc = _unc(aligned[-1], gt, inp["logvar"])
    return {"init": init, "per_iteration": per, "addg": addg, "uncertainty": unc,
            "total": init + sum(w * v for _, w, v in per) + addg + unc}


def _central(f, point):
    grad = []
    for i in range(len(point)):
        for j in range(len(point[0])):
            hi = [row[:] for row in point]
            lo = [row[:] for row in point]
            hi[i][j] += STEP
            lo[i][j] -= STEP
            grad.append((f(hi) - f(lo)) / (2 * STEP))
    w = len(point[0])
    return [grad[r * w:(r + 1) * w] for r in range(len(point))]


def _unc_inputs():
    rng = np.random.default_rng(51)
    gt = rng.uniform(0, 20, (4, 4))
    return {"pred": (gt + rng.normal(0, 2, (4, 4))).tolist(), "gt": gt.tolist(),
            "logvar": rng.uniform(-1, 1, (4, 4)).tolist()}


@fixture("objectives.gradcheck_uncertainty", 1e-6,
         "central differences (step 1e-3) of the scalar loss w.r.t. each prediction entry",
         _unc_inputs)
def gradcheck_uncertainty(inp):
    return {"fd_grad": _central(lambda p: _unc(p, inp["gt"], inp["logvar"]), inp["pred"])}


def _addg_fd_inputs():
    # error field with every forward difference at least 0.5 in magnitude
    e = [[0.0, 0.7, 1.9, 1.1], [1.5, 0.2, 3.0, 2.4], [0.6, 2.1, 1.2, 3.5], [2.2, 0.9, 2.8, 1.8]]
    gt = [[float(i + j) for j in range(4)] for i in range(4)]
    return {"pred": [[g + v for g, v in zip(gr, er)] for gr, er in zip(gt, e)], "gt": gt}


@fixture("objectives.gradcheck_addg", 1e-9,
         "central differences (step 1e-3) of the pooled forward-difference loss",
         _addg_fd_inputs)
def gradcheck_addg(inp):
    e = [[p - g for p, g in zip(pr, gr)] for pr, gr in zip(inp["pred"], inp["gt"])]
    gaps = [abs(e[i][j + 1] - e[i][j]) for i in range(4) for j in range(3)]
    gaps += [abs(e[i + 1][j] - e[i][j]) for i in range(3) for j in range(4)]
    return {"min_gap": min(gaps), "fd_grad": _central(lambda p: _addg(p, inp["gt"]), inp["pred"])}


def _cli_inputs():
    return {"loss": "uncertainty", "seed": 3, "shape": [16, 16], "step": STEP}


@fixture("harness.cli_gradcheck_seed3", 1e-4,
         "replays the seeded problem draw and compares closed-form and central-difference gradients",
         _cli_inputs)
def cli_gradcheck_seed3(inp):
    rng = np.random.default_rng(inp["seed"])
    shape = tuple(inp["shape"])
    gt = rng.uniform(0.0, 20.0, shape)
    logvar = rng.uniform(-1.0, 1.0, shape)
    point = gt + rng.normal(0.0, 2.0, shape)
    n = gt.size
    h = inp["step"]
    worst = 0.0
    for idx in np.ndindex(shape):
        r, s = point[idx] - gt[idx], logvar[idx]
        analytic = math.exp(-s) * r / n
        term = lambda rr: (0.5 * math.exp(-s) * rr * rr + 0.5 * s) / n
        fd = (term(r + h) - term(r - h)) / (2 * h)
        scale = max(abs(analytic), abs(fd))
        worst = max(worst, abs(analytic - fd) / scale if scale else 0.0)
    return {"max_relative_error": worst}
