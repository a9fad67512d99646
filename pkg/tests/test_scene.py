import numpy as np
import pytest

from conftest import load_fixture
from dualrefine.errors import SpecError
from dualrefine.scene import (
    OCCLUDED,
    TEXTURELESS,
    Plane,
    SceneSpec,
    default_suite,
    gen_scene,
    random_scene_spec,
    warp_right_to_left,
)


def test_same_spec_same_sample():
    a = gen_scene(random_scene_spec(3))
    b = gen_scene(random_scene_spec(3))
    for x, y in ((a.left, b.left), (a.right, b.right)):
        assert np.array_equal(x.values, y.values)
    assert np.array_equal(a.d_gt.values, b.d_gt.values)
    assert np.array_equal(a.occ_mask, b.occ_mask)
    assert not np.array_equal(a.left.values, gen_scene(random_scene_spec(4)).left.values)


def test_fronto_plane_shifts_exactly():
    spec = SceneSpec(24, 40, 16, planes=(Plane(0.0, 0.0, 5.0, (0, 0, 40, 24)),), seed=9)
    s = gen_scene(spec)
    left, right = s.left.values, s.right.values
    np.testing.assert_array_equal(left[:, 5:], right[:, :-5])
    assert s.occ_mask[:, :5].all() and not s.occ_mask[:, 5:].any()


def test_occlusion_matches_depth_order_enumeration():
    inputs, expected, _ = load_fixture("harness.occlusion_two_planes")
    planes = tuple(Plane(p["a"], p["b"], p["c"], tuple(p["region"])) for p in inputs["planes"])
    s = gen_scene(SceneSpec(inputs["height"], inputs["width"], inputs["dmax"], planes=planes))
    assert np.array_equal(s.occ_mask, np.array(expected["mask"]))
    assert int(s.occ_mask.sum()) == expected["occluded"]
    assert s.occ_mask.mean() == pytest.approx(expected["fraction"])
    assert np.all(s.region_labels[s.occ_mask] == OCCLUDED)


@pytest.mark.parametrize("texture,d", [("noise", 7.0), ("noise", 5.37), ("stripes", 6.3), ("flat", 4.6)])
def test_warp_identity_on_visible_pixels(texture, d):
    spec = SceneSpec(16, 48, 16, planes=(Plane(0.0, 0.0, d, (0, 0, 48, 16), texture=texture),), seed=2)
    s = gen_scene(spec)
    warped = warp_right_to_left(s.right, s.d_gt)
    keep = ~s.occ_mask & np.isfinite(warped)
    assert keep.sum() > 0.8 * keep.size
    np.testing.assert_allclose(warped[keep], s.left.values[keep], atol=1e-3)


def _away_from_edges(s, margin=2):
    """Visible pixels whose row neighbourhood is free of occlusion and depth edges."""
    d = s.d_gt.values.astype(np.float64)
    edge = s.occ_mask.copy()
    edge[:, 1:] |= np.abs(np.diff(d, axis=1)) > 0.5
    near = edge.copy()
    for k in range(1, margin + 1):
        near[:, k:] |= edge[:, :-k]
        near[:, :-k] |= edge[:, k:]
    return ~near


@pytest.mark.parametrize("seed", [5, 6, 7])
def test_warp_identity_on_layered_scene(seed):
    s = gen_scene(random_scene_spec(seed, noise_sigma=0.0))
    warped = warp_right_to_left(s.right, s.d_gt)
    keep = _away_from_edges(s) & np.isfinite(warped)
    assert keep.sum() > 0.7 * keep.size
    np.testing.assert_allclose(warped[keep], s.left.values[keep], atol=1e-3)


def test_labels_and_invariants_of_stock_scenes():
    for s in default_suite(7, 3):
        spec = s.spec
        assert s.left.shape == (spec.height, spec.width) == (64, 96)
        assert s.d_gt.values.min() >= 0 and s.d_gt.values.max() <= spec.dmax - 1
        assert (s.region_labels == TEXTURELESS).any()
        assert np.array_equal(s.region_labels == OCCLUDED, s.occ_mask)


def test_spec_round_trips_through_dict():
    spec = random_scene_spec(12)
    assert SceneSpec.from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize("plane", [
    Plane(0.0, 0.0, 20.0, (0, 0, 10, 10)),           # beyond dmax - 1
    Plane(0.0, 0.0, 2.0, (0, 0, 50, 10)),            # region off the image
    Plane(0.0, 0.0, 2.0, (0, 0, 10, 10), texture="plaid"),
    Plane(1.0, 0.0, 2.0, (0, 0, 10, 10)),            # slope that folds the warp
    Plane(-0.5, 0.0, 2.0, (0, 0, 10, 10)),           # negative disparity
])
def test_invalid_specs_are_rejected(plane):
    with pytest.raises(SpecError):
        gen_scene(SceneSpec(10, 10, 16, planes=(plane,)))
    with pytest.raises(SpecError):
        gen_scene(SceneSpec(10, 10, 16))
