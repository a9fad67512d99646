import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import load_fixture, unc
from dualrefine.cognition import (
    MAX_POSITIONS,
    SCAProjections,
    attention_weights,
    projected_values,
    random_projections,
    toy_cognition_features,
    ugsca,
)
from dualrefine.errors import ShapeError, SizeError
from dualrefine.field_core import FeatureMap, Grid2D


def test_features_constant_image():
    F = toy_cognition_features(Grid2D(np.full((5, 6), 0.4)), 6).values
    assert not F[..., 0].any() and not F[..., 3:].any()
    assert np.ptp(F[..., 1]) == 1 and np.ptp(F[..., 2]) == 1


def test_features_deterministic_and_tiled(rng):
    img = Grid2D(rng.random((6, 7)))
    a = toy_cognition_features(img, 14).values
    assert np.array_equal(a, toy_cognition_features(img, 14).values)
    assert np.array_equal(a[..., 6:12], a[..., :6])


def test_features_fixture():
    inp, exp, tol = load_fixture("cognition.features_ramp_4x4_d4")
    F = toy_cognition_features(Grid2D(np.array(inp["image"])), inp["d"]).values
    np.testing.assert_allclose(F, exp["features"], atol=tol)


def projections_from(inp):
    return SCAProjections(*(np.array(inp[k]) for k in ("q_conv", "q_bias", "wq", "wk", "wv")))


def test_dense_oracle_fixture():
    inp, exp, tol = load_fixture("cognition.ugsca_dense_2x2_d3")
    proj = projections_from(inp)
    U, F = unc(inp["U"]), FeatureMap(np.array(inp["F"]))
    np.testing.assert_allclose(attention_weights(U, F, proj), exp["attention"], atol=tol)
    np.testing.assert_allclose(ugsca(U, F, proj).values, exp["output"], atol=tol)


def test_identical_keys_give_uniform_rows(rng):
    F = FeatureMap(np.broadcast_to(rng.normal(size=3), (3, 4, 3)).copy())
    proj = random_projections(3, seed=1)
    U = unc(rng.normal(size=(3, 4)))
    A = attention_weights(U, F, proj)
    np.testing.assert_allclose(A, 1 / 12, atol=1e-12)
    mean_v = projected_values(F, proj).mean(axis=0)
    np.testing.assert_allclose(ugsca(U, F, proj).values.reshape(-1, 3), np.broadcast_to(mean_v, (12, 3)), atol=1e-6)


def test_one_hot_limit():
    d = 2
    eye = np.eye(d)
    q_conv = np.zeros((1, 1, 1, d))
    q_conv[0, 0, 0, 0] = 1.0
    proj = SCAProjections(q_conv, np.zeros(d), 100.0 * eye, eye, eye)
    F = np.zeros((1, 3, d))
    F[0, 1, 0] = 1.0              # the key that wins by a wide margin
    F[0, 2, 1] = 5.0
    out = ugsca(unc([[1.0, 1.0, 1.0]]), FeatureMap(F), proj).values
    # query logits: 100/sqrt(2) for the winner vs 0 for the others
    np.testing.assert_allclose(out[0, 0], F[0, 1], atol=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 4), st.integers(0, 10_000))
def test_rows_sum_to_one_and_convex_hull(h, w, d, seed):
    rng = np.random.default_rng(seed)
    proj = random_projections(d, seed=seed)
    U = unc(rng.normal(size=(h, w)))
    F = FeatureMap(rng.normal(size=(h, w, d)))
    A = attention_weights(U, F, proj)
    np.testing.assert_allclose(A.sum(axis=1), 1.0, atol=1e-6)
    V = projected_values(F, proj)
    out = ugsca(U, F, proj).values.reshape(-1, d)
    assert np.all(out >= V.min(axis=0) - 1e-5) and np.all(out <= V.max(axis=0) + 1e-5)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_permutation_equivariance_with_pointwise_query(seed):
    rng = np.random.default_rng(seed)
    h, w, d = 6, 7, 5
    proj = random_projections(d, seed=seed, kernel=1)
    U = rng.normal(size=(h, w))
    F = rng.normal(size=(h, w, d))
    perm = rng.permutation(h * w)
    base = ugsca(unc(U), FeatureMap(F), proj).values.reshape(-1, d)
    moved = ugsca(unc(U.reshape(-1)[perm].reshape(h, w)), FeatureMap(F.reshape(-1, d)[perm].reshape(h, w, d)), proj)
    assert np.array_equal(moved.values.reshape(-1, d), base[perm])


def test_logit_shift_invariance(rng):
    d = 2
    F = FeatureMap(rng.normal(size=(2, 3, d)))
    proj = random_projections(d, seed=3, kernel=1)
    U = unc(rng.normal(size=(2, 3)))
    A = attention_weights(U, F, proj)
    from dualrefine.cognition import attention_logits
    from dualrefine.matching import softmax

    L = attention_logits(U, F, proj)
    np.testing.assert_allclose(softmax(L + 7.5, axis=1), A, atol=1e-12)


def test_shape_and_size_guards(rng):
    proj = random_projections(3)
    with pytest.raises(ShapeError):
        ugsca(unc(np.zeros((2, 2))), FeatureMap(np.zeros((2, 2, 4))), proj)
    with pytest.raises(ShapeError):
        ugsca(unc(np.zeros((2, 3))), FeatureMap(np.zeros((2, 2, 3))), proj)
    side = int(np.sqrt(MAX_POSITIONS)) + 1
    with pytest.raises(SizeError):
        ugsca(unc(np.zeros((side, side))), FeatureMap(np.zeros((side, side, 3))), proj)
    with pytest.raises(ShapeError):
        SCAProjections(np.zeros((2, 2, 1, 3)), np.zeros(3), np.eye(3), np.eye(3), np.eye(3))
