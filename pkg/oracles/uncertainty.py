"""Adapter composition, residual loss, percentile anchors, masking curve."""

import math

import numpy as np

from . import ref
from .registry import fixture
from .scenes import small_scene


def _adapter_inputs():
    dmax, c = 4, 2.5
    center = lambda cin, cout, v: [[[[v if (ky, kx) == (1, 1) else 0.0 for _ in range(cout)]
                                      for _ in range(cin)] for kx in range(3)] for ky in range(3)]
    return {"scores": [[[c] * dmax for _ in range(4)] for _ in range(4)],
            "conv1": center(dmax, 1, 1.0 / dmax), "bias1": [0.0],
            "conv2": center(1, 1, 1.0), "bias2": [0.0]}


@fixture("uncertainty.adapter_hand_4x4", 1e-12,
         "channel-averaging centre tap then pass-through, composed by explicit convolution loops",
         _adapter_inputs)
def adapter_hand_4x4(inp):
    hidden = ref.conv_same(inp["scores"], inp["conv1"], inp["bias1"])
    hidden = [[[max(v, 0.0) for v in px] for px in row] for row in hidden]
    out = ref.conv_same(hidden, inp["conv2"], inp["bias2"])
    return {"logvar": [[px[0] for px in row] for row in out]}


def _loss_inputs():
    return {"residual": 2.0, "logvar": math.log(4.0)}


@fixture("uncertainty.loss_scalar_r2", 1e-12, "direct scalar evaluation of 0.5 e^-s r^2 + 0.5 s",
         _loss_inputs)
def loss_scalar_r2(inp):
    r, s = inp["residual"], inp["logvar"]
    return {"loss": 0.5 * math.exp(-s) * r * r + 0.5 * s}


def _percentile_inputs():
    return {"values": [[float(10 * r + c + 1) for c in range(10)] for r in range(10)], "theta": 25.0}


@fixture("uncertainty.percentile_1_to_100", 0.0, "sort, take the nearest-rank element, scan with <=",
         _percentile_inputs)
def percentile_1_to_100(inp):
    vals = inp["values"]
    tau = ref.nearest_rank([v for row in vals for v in row], inp["theta"])
    pixels = [[i, j] for i, row in enumerate(vals) for j, v in enumerate(row) if v <= tau]
    return {"tau": tau, "count": len(pixels), "pixels": pixels}


def _masking_inputs():
    s = small_scene()
    Fl = ref.featurize(s["left"], 1)
    Fr = ref.featurize(s["right"], 1)
    vol = ref.correlation(Fl, Fr, 8)
    return {"d_pred": [[ref.f32(v) for v in row] for row in ref.soft_argmin(vol, 0.05)],
            "d_gt": s["d_gt"],
            "U": [[ref.f32(v) for v in row] for row in ref.ambiguity(vol)],
            "fractions": [0.0, 5.0, 10.0, 20.0]}


@fixture("uncertainty.masking_sweep_scene", 1e-9,
         "explicit index sets: drop the floor(f n / 100) largest U (row-major tie order), average the rest",
         _masking_inputs)
def masking_sweep_scene(inp):
    pred, gt, U = inp["d_pred"], inp["d_gt"], inp["U"]
    w = len(U[0])
    idx = [(i, j) for i in range(len(U)) for j in range(w)]
    order = sorted(idx, key=lambda p: (-U[p[0]][p[1]], p[0] * w + p[1]))
    curve = []
    for f in inp["fractions"]:
        dropped = set(order[: math.floor(f * len(idx) / 100.0)])
        kept = [abs(pred[i][j] - gt[i][j]) for i, j in idx if (i, j) not in dropped]
        curve.append([f, sum(kept) / len(kept)])
    return {"curve": curve}
