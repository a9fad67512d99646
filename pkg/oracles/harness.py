"""Visibility enumeration, byte-level container dumps, CLI alignment."""

import struct

import numpy as np

from . import ref
from .alignment import lu_kss_loops
from .registry import fixture


def _occlusion_inputs():
    return {"height": 32, "width": 64, "dmax": 16,
            "planes": [{"a": 0.01, "b": 0.02, "c": 2.0, "region": [0, 0, 64, 32]},
                       {"a": 0.0, "b": 0.0, "c": 10.0, "region": [20, 8, 44, 24]}]}


def _covers(p, x, y, width):
    x0, y0, x1, y1 = p["region"]
    right_open = x1 == width
    return x >= x0 and (right_open or x < x1) and y0 <= y < y1


@fixture("harness.occlusion_two_planes", 0.0,
         "per-pixel depth order: nearest plane visible; occluded if x - d leaves the frame or "
         "a nearer plane covers the right-image point",
         _occlusion_inputs)
def occlusion_two_planes(inp):
    w, h, planes = inp["width"], inp["height"], inp["planes"]
    disp = lambda p, x, y: p["a"] * x + p["b"] * y + p["c"]
    mask = []
    for y in range(h):
        row = []
        for x in range(w):
            covering = [(disp(p, x, y), i) for i, p in enumerate(planes)
                        if p["region"][0] <= x < p["region"][2] and p["region"][1] <= y < p["region"][3]]
            d, vis = max(covering)
            xr = x - d
            occ = xr < 0
            for i, q in enumerate(planes):
                if i == vis:
                    continue
                xq = (xr + q["b"] * y + q["c"]) / (1.0 - q["a"])
                if _covers(q, xq, y, w) and disp(q, xq, y) > d:
                    occ = True
            row.append(occ)
        mask.append(row)
    count = sum(map(sum, mask))
    return {"occluded": count, "fraction": count / (w * h), "mask": mask}


def _pfm_inputs():
    return {"value": 3.5}


@fixture("harness.pfm_1x1_bytes", 0.0, "header text plus struct-packed little-endian float",
         _pfm_inputs)
def pfm_1x1_bytes(inp):
    data = b"Pf\n1 1\n-1.0\n" + struct.pack("<f", inp["value"])
    return {"hex": data.hex(), "length": len(data)}


def _big_endian_inputs():
    return {"rows": [[1.25, -2.0, 7.75], [0.5, 1e-3, 3.0e4]]}


@fixture("harness.pfm_big_endian", 0.0,
         "hand-assembled big-endian file (rows bottom-to-top) and the values it must decode to",
         _big_endian_inputs)
def pfm_big_endian(inp):
    rows = inp["rows"]
    h, w = len(rows), len(rows[0])
    payload = b"".join(struct.pack(">f", v) for row in reversed(rows) for v in row)
    data = f"Pf\n{w} {h}\n1.0\n".encode() + payload
    return {"hex": data.hex(), "values": [[ref.f32(v) for v in row] for row in rows]}


def _featc_inputs():
    return {"shape": [2, 3, 4], "keep_payload_bytes": 50}


@fixture("harness.featc_truncated", 0.0, "8-byte magic + three <u4 counts + 4 bytes per value",
         _featc_inputs)
def featc_truncated(inp):
    h, w, c = inp["shape"]
    header = struct.pack("<8sIII", b"COGFEAT1", h, w, c)
    full = len(header) + 4 * h * w * c
    return {"header_hex": header.hex(), "expected_bytes": full,
            "actual_bytes": len(header) + inp["keep_payload_bytes"]}


def _cli_align_inputs():
    # smooth, nowhere-constant disparities so no neighbourhood is degenerate
    rng = np.random.default_rng(61)
    yy, xx = np.mgrid[0:24, 0:40].astype(np.float64)
    prev = (2.0 + 0.15 * xx + 0.1 * yy + 0.3 * np.sin(0.3 * xx + 0.2 * yy)).astype(np.float32)
    nxt = (1.05 * prev.astype(np.float64) + 0.5).astype(np.float32)
    return {"d_prev": prev.astype(float).tolist(), "d_next": nxt.astype(float).tolist(),
            "U": rng.uniform(0, 1, prev.shape).astype(np.float32).astype(float).tolist(),
            "theta": 30.0, "K": 8}


@fixture("harness.cli_align_affine", 1e-5,
         "loop-level anchored alignment (shared with the alignment oracle) on an exact affine pair",
         _cli_align_inputs)
def cli_align_affine(inp):
    out, _, (s, t) = lu_kss_loops(inp["d_next"], inp["d_prev"], inp["U"], inp["theta"], inp["K"])
    return {"aligned": out, "global": [s, t]}
