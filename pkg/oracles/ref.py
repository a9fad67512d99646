"""Plain-Python reference arithmetic shared by several oracles.

Arrays are nested lists indexed ``[row][col]`` (and ``[channel]`` last).
"""

from __future__ import annotations

import math

FILL = -1.0e6


def f32(x: float) -> float:
    import struct

    return struct.unpack("<f", struct.pack("<f", x))[0]


def featurize(img, radius):
    h, w = len(img), len(img[0])
    out = []
    for i in range(h):
        row = []
        for j in range(w):
            patch = []
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    ii = min(max(i + dy, 0), h - 1)
                    jj = min(max(j + dx, 0), w - 1)
                    patch.append(img[ii][jj])
            mean = sum(patch) / len(patch)
            row.append([f32(v - mean) for v in patch])
        out.append(row)
    return out


def correlation(Fl, Fr, dmax):
    h, w, c = len(Fl), len(Fl[0]), len(Fl[0][0])
    norm = math.sqrt(c)
    vol = [[[FILL] * dmax for _ in range(w)] for _ in range(h)]
    for i in range(h):
        for j in range(w):
            for k in range(dmax):
                if j - k < 0:
                    continue
                acc = 0.0
                for ch in range(c):
                    acc += Fl[i][j][ch] * Fr[i][j - k][ch]
                vol[i][j][k] = acc / norm
    return vol


def softmax(values):
    m = max(values)
    e = [math.exp(v - m) for v in values]
    s = sum(e)
    return [v / s for v in e]


def soft_argmin(vol, temperature):
    out = []
    for row in vol:
        out.append([sum(k * p for k, p in enumerate(softmax([v / temperature for v in s]))) for s in row])
    return out


def ambiguity(vol):
    out = []
    for row in vol:
        r = []
        for j, scores in enumerate(row):
            cand = sorted(scores[: j + 1], reverse=True)
            r.append(0.0 if len(cand) < 2 else -(cand[0] - cand[1]))
        out.append(r)
    return out


def median(values):
    v = sorted(values)
    n = len(v)
    return v[n // 2] if n % 2 else 0.5 * (v[n // 2 - 1] + v[n // 2])


def conv_same(x, kernel, bias):
    """Zero-padded cross-correlation; x[i][j][c], kernel[ky][kx][cin][cout]."""
    h, w = len(x), len(x[0])
    kh, kw = len(kernel), len(kernel[0])
    cin, cout = len(kernel[0][0]), len(kernel[0][0][0])
    out = []
    for i in range(h):
        row = []
        for j in range(w):
            acc = list(bias)
            for ky in range(kh):
                for kx in range(kw):
                    ii, jj = i + ky - kh // 2, j + kx - kw // 2
                    if not (0 <= ii < h and 0 <= jj < w):
                        continue
                    for a in range(cin):
                        for b in range(cout):
                            acc[b] += x[ii][jj][a] * kernel[ky][kx][a][b]
            row.append(acc)
        out.append(row)
    return out


def matvec_rows(rows, W):
    """rows @ W for a list of row vectors."""
    return [[sum(r[a] * W[a][b] for a in range(len(r))) for b in range(len(W[0]))] for r in rows]


def solve_wls(x, y, w):
    """2x2 normal equations for s*x + t ~ y with weights w (Cramer's rule)."""
    sw = sum(w)
    sx = sum(wi * xi for wi, xi in zip(w, x))
    sy = sum(wi * yi for wi, yi in zip(w, y))
    sxx = sum(wi * xi * xi for wi, xi in zip(w, x))
    sxy = sum(wi * xi * yi for wi, xi, yi in zip(w, x, y))
    det = sxx * sw - sx * sx
    s = (sxy * sw - sx * sy) / det
    t = (sxx * sy - sx * sxy) / det
    return s, t


def nearest_rank(values, theta):
    v = sorted(values)
    return v[max(1, math.ceil(theta / 100.0 * len(v))) - 1]


def to_list(a):
    return [to_list(v) for v in a] if hasattr(a, "__len__") and not isinstance(a, (str, bytes)) else float(a)
