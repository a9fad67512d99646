"""Inverse-distance weights, weighted scale-shift fits and a loop-level
re-implementation of the anchored alignment."""

import math

import numpy as np

from . import ref
from .registry import fixture
from .scenes import small_scene

EPS = 1e-6


def _idw_inputs():
    return {"query": [0, 0], "anchors": [[0, 1], [0, 2]], "K": 2}


@fixture("alignment.idw_weights_1_2", 1e-6, "normalised 1/(distance + 1e-6)", _idw_inputs)
def idw_weights_1_2(inp):
    q = inp["query"]
    dist = sorted(math.dist(q, a) for a in inp["anchors"])[: inp["K"]]
    raw = [1.0 / (d + EPS) for d in dist]
    return {"distances": dist, "weights": [r / sum(raw) for r in raw]}


def _wls_inputs():
    rng = np.random.default_rng(31)
    x = rng.uniform(0, 20, 12)
    return {"x": x.tolist(), "y": (0.8 * x + 1.3 + rng.normal(0, 0.4, 12)).tolist(),
            "w": rng.uniform(0.1, 3.0, 12).tolist()}


@fixture("alignment.wls_normal_equations", 1e-8, "explicit 2x2 normal equations, Cramer's rule",
         _wls_inputs)
def wls_normal_equations(inp):
    s, t = ref.solve_wls(inp["x"], inp["y"], inp["w"])
    return {"s": s, "t": t}


def _fit(x, y, w):
    sw = sum(w)
    w = [v / sw for v in w]
    mx = sum(a * b for a, b in zip(w, x))
    var = sum(a * (b - mx) ** 2 for a, b in zip(w, x))
    if var >= 1e-9:
        s, t = ref.solve_wls(x, y, w)
        if s > 1e-6:
            return s, t
    return 1.0, sum(a * (c - b) for a, b, c in zip(w, x, y))


def lu_kss_loops(d_next, d_prev, U, theta, K):
    h, w = len(U), len(U[0])
    tau = ref.nearest_rank([v for row in U for v in row], theta)
    anchors = [(i, j) for i in range(h) for j in range(w) if U[i][j] <= tau]
    fits = {}
    for a in anchors:
        others = sorted((b for b in anchors if b != a),
                        key=lambda b: ((b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2, b[0] * w + b[1]))[:K]
        dist = [math.dist(a, b) for b in others]
        weights = [1.0 / (d + EPS) for d in dist]
        fits[a] = _fit([d_next[i][j] for i, j in others], [d_prev[i][j] for i, j in others], weights)
    s_star = sum(f[0] for f in fits.values()) / len(fits)
    t_star = sum(f[1] for f in fits.values()) / len(fits)
    out = [[max(0.0, fits.get((i, j), (s_star, t_star))[0] * d_next[i][j]
                + fits.get((i, j), (s_star, t_star))[1]) for j in range(w)] for i in range(h)]
    return out, anchors, (s_star, t_star)


def _drift_inputs():
    s = small_scene()
    rng = np.random.default_rng(41)
    prev = np.array(s["d_gt"])
    nxt = 1.05 * prev + 0.5 + rng.normal(0, 0.05, prev.shape)
    f32 = lambda a: [[ref.f32(v) for v in row] for row in a.tolist()]
    return {"d_prev": f32(prev), "d_next": f32(nxt), "U": f32(rng.uniform(0, 1, prev.shape)),
            "theta": 30.0, "K": 8}


@fixture("alignment.drift_noisy_scene", 1e-5,
         "anchors by nearest-rank percentile, brute-force KNN, per-anchor normal equations, mean fit",
         _drift_inputs)
def drift_noisy_scene(inp):
    prev, nxt = inp["d_prev"], inp["d_next"]
    out, anchors, (s, t) = lu_kss_loops(nxt, prev, inp["U"], inp["theta"], inp["K"])
    rms = lambda f: math.sqrt(sum((f[i][j] - prev[i][j]) ** 2 for i, j in anchors) / len(anchors))
    before, after = rms(nxt), rms(out)
    return {"aligned": out, "global": [s, t], "rms_before": before, "rms_after": after,
            "ratio": after / before}
