"""Cognition feature channels and dense uncertainty-guided attention."""

import math

import numpy as np

from . import ref
from .registry import fixture


def _features_inputs():
    return {"image": [[float(4 * r + c) for c in range(4)] for r in range(4)], "d": 4}


@fixture("cognition.features_ramp_4x4_d4", 1e-6,
         "min-max intensity, column and row ramps, edge-clamped 3x3 box mean",
         _features_inputs)
def features_ramp_4x4_d4(inp):
    img = inp["image"]
    h, w = len(img), len(img[0])
    lo = min(min(r) for r in img)
    hi = max(max(r) for r in img)
    norm = [[(v - lo) / (hi - lo) for v in row] for row in img]

    def box(i, j):
        vals = [norm[min(max(i + dy, 0), h - 1)][min(max(j + dx, 0), w - 1)]
                for dy in (-1, 0, 1) for dx in (-1, 0, 1)]
        return sum(vals) / 9.0

    chans = [[[norm[i][j], j / (w - 1), i / (h - 1), box(i, j)][: inp["d"]] for j in range(w)]
             for i in range(h)]
    return {"features": chans}


def _attention_inputs():
    rng = np.random.default_rng(21)
    d = 3
    g = lambda *shape: rng.uniform(-1, 1, shape).tolist()
    return {"U": g(2, 2), "F": g(2, 2, d),
            "q_conv": g(3, 3, 1, d), "q_bias": g(d), "wq": g(d, d), "wk": g(d, d), "wv": g(d, d)}


@fixture("cognition.ugsca_dense_2x2_d3", 1e-5,
         "explicit HW x HW attention matrix: conv-lifted U queries, feature keys/values",
         _attention_inputs)
def ugsca_dense_2x2_d3(inp):
    U, F = inp["U"], inp["F"]
    h, w, d = len(F), len(F[0]), len(F[0][0])
    lifted = ref.conv_same([[[u] for u in row] for row in U], inp["q_conv"], inp["q_bias"])
    flat_l = [lifted[i][j] for i in range(h) for j in range(w)]
    flat_f = [[F[i][j][c] for c in range(d)] for i in range(h) for j in range(w)]
    q = ref.matvec_rows(flat_l, inp["wq"])
    k = ref.matvec_rows(flat_f, inp["wk"])
    v = ref.matvec_rows(flat_f, inp["wv"])
    n = h * w
    A = [ref.softmax([sum(q[a][c] * k[b][c] for c in range(d)) / math.sqrt(d) for b in range(n)])
         for a in range(n)]
    out = [[sum(A[a][b] * v[b][c] for b in range(n)) for c in range(d)] for a in range(n)]
    return {"attention": A, "output": [[out[i * w + j] for j in range(w)] for i in range(h)]}
