"""Scene inputs for the oracles.

Rendering is delegated to the harness generator; the oracles only consume
its images and ground truth, never its numerical kernels.
"""

from dualrefine.scene import Plane, SceneSpec, gen_scene

SMALL = SceneSpec(
    height=24, width=40, dmax=8,
    planes=(Plane(0.02, 0.03, 2.0, (0, 0, 40, 24), "noise"),
            Plane(0.0, 0.0, 5.0, (20, 6, 32, 18), "flat", level=0.4)),
    occluders=(),
    noise_sigma=0.01,
    seed=5,
)


def small_scene(spec: SceneSpec = SMALL) -> dict:
    s = gen_scene(spec)
    return {
        "left": s.left.values.astype(float).tolist(),
        "right": s.right.values.astype(float).tolist(),
        "labels": s.region_labels.astype(int).tolist(),
        "d_gt": s.d_gt.values.astype(float).tolist(),
        "occ": s.occ_mask.astype(bool).tolist(),
    }
