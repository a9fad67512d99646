"""Patch descriptors, correlation volume, soft-argmin and ambiguity."""

import numpy as np

from . import ref
from .registry import fixture
from .scenes import small_scene


def _ramp_inputs():
    return {"image": [[(3 * r + c) / 8.0 for c in range(3)] for r in range(3)], "radius": 1,
            "pixel": [1, 1]}


@fixture("matching.featurize_ramp_center", 1e-7, "hand patch extraction, mean subtracted",
         _ramp_inputs)
def featurize_ramp_center(inp):
    img, (i, j) = inp["image"], inp["pixel"]
    patch = [img[i + dy][j + dx] for dy in (-1, 0, 1) for dx in (-1, 0, 1)]
    mean = sum(patch) / 9.0
    return {"descriptor": [v - mean for v in patch]}


def _corr_inputs():
    rng = np.random.default_rng(11)
    f = lambda: [[[ref.f32(v) for v in px] for px in row] for row in rng.normal(size=(2, 3, 2)).tolist()]
    return {"left": f(), "right": f(), "dmax": 2}


@fixture("matching.correlation_random_2x3x2", 0.0, "triple-loop dot product, sequential channel sum",
         _corr_inputs)
def correlation_random_2x3x2(inp):
    return {"scores": ref.correlation(inp["left"], inp["right"], inp["dmax"])}


def _softargmin_inputs():
    rng = np.random.default_rng(12)
    return {"scores": [[[ref.f32(v) for v in px] for px in row]
                       for row in rng.normal(size=(4, 4, 8)).tolist()], "temperature": 1.0}


@fixture("matching.soft_argmin_random_4x4x8", 1e-5, "per-pixel softmax expectation",
         _softargmin_inputs)
def soft_argmin_random_4x4x8(inp):
    return {"disparity": ref.soft_argmin(inp["scores"], inp["temperature"])}


def _textureless_inputs():
    s = small_scene()
    return {"left": s["left"], "right": s["right"], "labels": s["labels"], "radius": 1, "dmax": 8}


@fixture("matching.ambiguity_textureless_median", 1e-6,
         "brute-force descriptors, correlation and top-2 margins; medians per label",
         _textureless_inputs)
def ambiguity_textureless_median(inp):
    Fl = ref.featurize(inp["left"], inp["radius"])
    Fr = ref.featurize(inp["right"], inp["radius"])
    U = ref.ambiguity(ref.correlation(Fl, Fr, inp["dmax"]))
    labels = inp["labels"]
    pick = lambda lab: [U[i][j] for i in range(len(U)) for j in range(len(U[0])) if labels[i][j] == lab]
    return {"median_textured": ref.median(pick(0)), "median_textureless": ref.median(pick(1))}
