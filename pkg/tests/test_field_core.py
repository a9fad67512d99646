import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import load_fixture
from dualrefine.errors import RangeError, ShapeError
from dualrefine.field_core import (
    DisparityField,
    FeatureMap,
    Grid2D,
    UncertaintyField,
    bilinear_sample,
    forward_diff,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, width=32)


def grids(min_side=1, max_side=6):
    shape = st.tuples(st.integers(min_side, max_side), st.integers(min_side, max_side))
    return shape.flatmap(lambda s: arrays(np.float32, s, elements=finite))


def test_grid_rejects_nonfinite_and_bad_shapes():
    with pytest.raises(RangeError):
        Grid2D(np.array([[1.0, np.nan]]))
    with pytest.raises(RangeError):
        Grid2D(np.array([[np.inf]]))
    with pytest.raises(ShapeError):
        Grid2D(np.zeros((0, 3)))
    with pytest.raises(ShapeError):
        Grid2D(np.zeros(4))


def test_grid_storage_is_float32_and_read_only():
    g = Grid2D(np.arange(6.0).reshape(2, 3))
    assert g.values.dtype == np.float32
    assert (g.height, g.width) == (2, 3)
    with pytest.raises(ValueError):
        g.values[0, 0] = 5


def test_feature_map_needs_channels():
    with pytest.raises(ShapeError):
        FeatureMap(np.zeros((2, 2, 0)))
    assert FeatureMap(np.zeros((2, 3, 4))).channels == 4


def test_disparity_field_validity():
    d = DisparityField.from_array([[1.0, np.inf], [2.0, np.nan]])
    assert d.valid.tolist() == [[True, False], [True, False]]
    with pytest.raises(RangeError):
        DisparityField.from_array([[-1.0]])
    with pytest.raises(RangeError):
        DisparityField.from_array([[40.0]], dmax=32)
    # negative placeholders are fine where invalid
    DisparityField(Grid2D(np.array([[-3.0]])), np.array([[False]]))


def test_uncertainty_field_finite():
    with pytest.raises(RangeError):
        UncertaintyField.from_array([[np.nan]])


def test_bilinear_constant_and_lattice():
    g = Grid2D(np.full((4, 5), 7.0))
    assert bilinear_sample(g, 1.3, 2.7) == pytest.approx(7.0)
    v = np.arange(20.0).reshape(4, 5)
    assert bilinear_sample(Grid2D(v), 2, 3) == v[3, 2]


def test_bilinear_fixture():
    inp, exp, tol = load_fixture("field_core.bilinear_2x2")
    assert abs(bilinear_sample(Grid2D(np.array(inp["grid"])), inp["x"], inp["y"]) - exp["value"]) <= tol


def test_bilinear_out_of_bounds():
    g = Grid2D(np.zeros((2, 2)))
    for x, y in [(-0.1, 0), (1.01, 0), (0, 1.5)]:
        with pytest.raises(RangeError):
            bilinear_sample(g, x, y)


def test_forward_diff_examples():
    assert forward_diff(Grid2D(np.array([[0.0, 1.0, 3.0]])), "x").values.tolist() == [[1.0, 2.0]]
    assert not forward_diff(Grid2D(np.full((3, 3), 2.0)), "y").values.any()
    inp, exp, _ = load_fixture("field_core.forward_diff_y")
    assert forward_diff(Grid2D(np.array(inp["grid"])), inp["axis"]).values.tolist() == exp["diff"]


def test_forward_diff_degenerate():
    with pytest.raises(ShapeError):
        forward_diff(Grid2D(np.zeros((3, 1))), "x")
    with pytest.raises(ShapeError):
        forward_diff(Grid2D(np.zeros((1, 3))), "y")


@settings(max_examples=60, deadline=None)
@given(grids(min_side=2), st.data())
def test_bilinear_linear_between_lattice_points(values, data):
    g = Grid2D(values)
    r = data.draw(st.integers(0, g.height - 1))
    c = data.draw(st.integers(0, g.width - 2))
    f = data.draw(st.floats(0, 1))
    expect = (1 - f) * float(values[r, c]) + f * float(values[r, c + 1])
    assert bilinear_sample(g, c + f, r) == pytest.approx(expect, abs=1e-3)
    assert bilinear_sample(g, c, r) == float(values[r, c])


@settings(max_examples=60, deadline=None)
@given(grids(min_side=2).flatmap(lambda a: st.tuples(st.just(a), arrays(np.float32, a.shape, elements=finite))),
       st.sampled_from(["x", "y"]))
def test_forward_diff_linear(pair, axis):
    a, b = pair
    lhs = forward_diff(Grid2D(a.astype(np.float64) + b), axis).values
    rhs = forward_diff(Grid2D(a), axis).values + forward_diff(Grid2D(b), axis).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-3)
