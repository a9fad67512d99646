import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import disp, load_fixture, unc
from dualrefine.errors import EmptyDomainError, RangeError, SamplingError, ShapeError
from dualrefine.objectives import (
    LOSS_NAMES,
    GradProblem,
    addg_grad,
    addg_loss,
    grad_check,
    iteration_weights,
    l1_loss,
    make_problem,
    smooth_l1_init_loss,
    total_loss,
)
from dualrefine.uncertainty import uncertainty_loss_grad


def test_addg_vanishes_on_exact_and_offset_predictions():
    gt = disp(np.arange(12.0).reshape(3, 4))
    assert addg_loss(gt, gt) == 0.0
    assert addg_loss(disp(gt.values + 2.5), gt) == 0.0


def test_addg_fixture():
    inputs, expected, tol = load_fixture("objectives.addg_2x2")
    assert addg_loss(disp(inputs["pred"]), disp(inputs["gt"])) == pytest.approx(expected["addg"], abs=tol)


def test_addg_needs_two_by_two():
    with pytest.raises(ShapeError):
        addg_loss(disp([[1.0, 2.0]]), disp([[1.0, 2.0]]))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-10, 10))
def test_addg_ignores_constant_offsets(seed, c):
    rng = np.random.default_rng(seed)
    gt = rng.uniform(0, 20, (5, 6))
    pred = gt + rng.normal(0, 1, gt.shape) + 20.0
    a = addg_loss(disp(pred), disp(gt))
    b = addg_loss(disp(pred + c), disp(gt))
    assert a == pytest.approx(b, abs=1e-5)


def test_smooth_l1_and_l1_on_hand_values():
    gt = disp([[0.0, 0.0]])
    d = disp([[0.5, 3.0]])
    assert smooth_l1_init_loss(d, gt) == pytest.approx((0.125 + 2.5) / 2)
    assert l1_loss(d, gt) == pytest.approx(1.75)


def test_iteration_weights():
    assert iteration_weights(2, 0.9) == pytest.approx([0.9, 1.0])
    w = iteration_weights(6, 0.8)
    assert all(a < b for a, b in zip(w, w[1:]))
    assert w == pytest.approx([0.8 ** (6 - k) for k in range(1, 7)])


def test_perfect_prediction_costs_nothing():
    gt = disp(np.arange(9.0).reshape(3, 3))
    b = total_loss(gt, [gt, gt], gt, unc(np.zeros((3, 3))))
    assert (b.init, b.addg, b.uncertainty, b.total) == (0.0, 0.0, 0.0, 0.0)
    assert [v for _, _, v in b.per_iteration] == [0.0, 0.0]


def test_breakdown_fixture():
    inputs, expected, tol = load_fixture("objectives.breakdown_2x2")
    b = total_loss(disp(inputs["d0"]), [disp(a) for a in inputs["aligned"]], disp(inputs["gt"]),
                   unc(inputs["logvar"]), gamma=inputs["gamma"])
    for key in ("init", "addg", "uncertainty", "total"):
        assert getattr(b, key) == pytest.approx(expected[key], abs=tol), key
    for got, want in zip(b.per_iteration, expected["per_iteration"]):
        assert got == pytest.approx(tuple(want), abs=tol)
    parts = b.init + sum(w * v for _, w, v in b.per_iteration) + b.addg + b.uncertainty
    assert b.total == pytest.approx(parts, abs=1e-6)
    assert b.as_dict()["per_iteration"][0]["k"] == 1


def test_total_loss_rejects_bad_arguments():
    gt = disp(np.ones((2, 2)))
    with pytest.raises(EmptyDomainError):
        total_loss(gt, [], gt, unc(np.zeros((2, 2))))
    with pytest.raises(RangeError):
        total_loss(gt, [gt], gt, unc(np.zeros((2, 2))), gamma=0.0)


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_uncertainty_loss_lower_bound_at_optimum(r):
    s = math.log(r * r)
    value = 0.5 * math.exp(-s) * r * r + 0.5 * s
    assert value == pytest.approx(0.5 * (1.0 + math.log(r * r)), abs=1e-12)


# -- gradients --------------------------------------------------------------

def test_uncertainty_gradient_matches_fixture():
    inputs, expected, tol = load_fixture("objectives.gradcheck_uncertainty")
    pred, gt, logvar = (np.asarray(inputs[k]) for k in ("pred", "gt", "logvar"))
    g, _ = uncertainty_loss_grad(pred, gt, logvar, np.ones(pred.shape, dtype=bool))
    np.testing.assert_allclose(g, expected["fd_grad"], rtol=1e-6, atol=1e-9)


def test_addg_gradient_matches_fixture():
    inputs, expected, tol = load_fixture("objectives.gradcheck_addg")
    assert expected["min_gap"] > 0.1
    g = addg_grad(np.asarray(inputs["pred"]), np.asarray(inputs["gt"]))
    np.testing.assert_allclose(g, expected["fd_grad"], atol=1e-9)


@pytest.mark.parametrize("name", LOSS_NAMES)
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_grad_check_passes_for_every_loss(name, seed):
    err, n = grad_check(make_problem(name, seed=seed), samples=100, return_count=True)
    assert n >= 100
    bound = 1e-8 if name == "quadratic" else 1e-4
    assert err <= bound


def test_grad_check_catches_a_wrong_gradient():
    good = make_problem("l1", seed=0)
    bad = GradProblem("l1", good.loss, lambda d: 2.0 * good.grad(d), good.point, good.admissible)
    assert grad_check(bad) > 0.4


def test_grad_check_with_nothing_admissible():
    p = make_problem("l1", seed=0)
    blocked = GradProblem("l1", p.loss, p.grad, p.point, lambda d, h: np.zeros(d.shape, dtype=bool))
    with pytest.raises(SamplingError):
        grad_check(blocked)


def test_unknown_loss_name():
    with pytest.raises((ValueError, KeyError)):
        make_problem("nope")
