"""Scalar soft-argmax window arithmetic and recorded pipeline runs.

The two pipeline fixtures have no closed form: their expected values are
measurements of an end-to-end run, recorded so regressions show up as
diffs. Their pass/fail bounds live in the tests.
"""

import math

import numpy as np

from . import ref
from .registry import fixture


def _window_inputs():
    # cost volumes store 32-bit scores
    return {"window": [ref.f32(v) for v in (0.1, 0.4, 0.9, 0.6, 0.2)], "d": 4.0, "temperature": 0.25}


@fixture("refinement.window_5tap", 1e-9, "softmax(window / T) weighted mean of offsets -2..2",
         _window_inputs)
def window_5tap(inp):
    z = [v / inp["temperature"] for v in inp["window"]]
    m = max(z)
    e = [math.exp(v - m) for v in z]
    offset = sum((j - 2) * v for j, v in enumerate(e)) / sum(e)
    return {"offset": offset, "updated": inp["d"] + offset}


def _fixed_point_inputs():
    return {"plane": [0.0, 0.0, 6.0], "height": 64, "width": 96, "dmax": 32, "seed": 3,
            "config": {"radius": 1, "temperature": 0.05, "sc_gain": 0.0}}


@fixture("refinement.fixed_point_gt_init", 1e-6,
         "pipeline run from the ground truth on a noise-free fronto-parallel textured plane",
         _fixed_point_inputs)
def fixed_point_gt_init(inp):
    from dualrefine.refinement import RefineConfig, run_refinement
    from dualrefine.scene import Plane, SceneSpec, gen_scene

    a, b, c = inp["plane"]
    spec = SceneSpec(inp["height"], inp["width"], inp["dmax"],
                     planes=(Plane(a, b, c, (0, 0, inp["width"], inp["height"])),), seed=inp["seed"])
    s = gen_scene(spec)
    traj = run_refinement(s, RefineConfig(**inp["config"]), d_init=s.d_gt)
    return {"initial_epe": traj.epe[0], "final_epe": traj.epe[-1]}


def _suite_inputs():
    return {"suite_seed": 7, "count": 3}


@fixture("refinement.suite_ratio_seed7", 1e-6,
         "default pipeline on the stock suite; mean initial and final EPE over its scenes",
         _suite_inputs)
def suite_ratio_seed7(inp):
    from dualrefine.refinement import run_refinement
    from dualrefine.scene import default_suite

    runs = [run_refinement(s) for s in default_suite(inp["suite_seed"], inp["count"])]
    init = float(np.mean([t.epe[0] for t in runs]))
    final = float(np.mean([t.epe[-1] for t in runs]))
    return {"initial_epe": init, "final_epe": final, "ratio": final / init}
