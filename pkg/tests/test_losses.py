"""Loss conventions and gradient surgery."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soblab.errors import BothZeroError, ShapeMismatchError, ZeroTargetNormError
from soblab.training import (
    der_loss,
    l2_loss,
    pcgrad_merge,
    relative_l2_error,
    sobolev_loss,
)


def test_l2_loss_zero_on_match():
    x = np.arange(6.0).reshape(2, 3)
    assert l2_loss(x, x) == 0.0


def test_l2_loss_single_unit_residual():
    assert l2_loss(np.array([[1.0]]), np.array([[0.0]])) == 1.0


def test_l2_loss_two_sample_hand_value():
    # sample means: (1 + 1)/2 = 1 and (0 + 4)/2 = 2; average 1.5
    pred = np.array([[1.0, 1.0], [0.0, 2.0]])
    target = np.array([[0.0, 0.0], [0.0, 0.0]])
    assert l2_loss(pred, target) == 1.5


def test_l2_loss_shape_guard():
    with pytest.raises(ShapeMismatchError):
        l2_loss(np.zeros((2, 3)), np.zeros((3, 2)))


def test_der_loss_component_mean():
    # one sample, one point, two components: (1 + 0)/2
    pred = np.array([[[1.0, 0.0]]])
    target = np.zeros((1, 1, 2))
    assert der_loss(pred, target) == 0.5


def test_der_loss_quadratic_homogeneity():
    rng = np.random.default_rng(0)
    pred = rng.normal(size=(3, 4, 2))
    target = rng.normal(size=(3, 4, 2))
    base = der_loss(pred, target)
    assert der_loss(3.0 * pred, 3.0 * target) == pytest.approx(9.0 * base, rel=1e-12)


def test_sobolev_loss_sum_and_weight():
    assert sobolev_loss(0.0, 0.0) == 0.0
    assert sobolev_loss(1.5, 0.5) == 2.0
    assert sobolev_loss(1.5, 0.5, der_weight=0.0) == 1.5


def test_combined_loss_zero_iff_both_residuals_vanish():
    rng = np.random.default_rng(2)
    values = rng.normal(size=(2, 5))
    grads = rng.normal(size=(2, 5, 1))
    assert sobolev_loss(l2_loss(values, values), der_loss(grads, grads)) == 0.0
    assert sobolev_loss(l2_loss(values + 1e-3, values), der_loss(grads, grads)) > 0.0
    assert sobolev_loss(l2_loss(values, values), der_loss(grads + 1e-3, grads)) > 0.0


def test_relative_l2_error_basics():
    t = np.array([[3.0, 4.0], [1.0, 0.0]])
    assert relative_l2_error(t, t) == 0.0
    assert relative_l2_error(1.01 * t, t) == pytest.approx(0.01, rel=1e-12)
    # per-sample errors 0.02 and 0.04 average to 0.03
    pred = np.array([[1.02], [2.08]])
    target = np.array([[1.0], [2.0]])
    assert relative_l2_error(pred, target) == pytest.approx(0.03, rel=1e-12)


def test_relative_l2_error_zero_target():
    with pytest.raises(ZeroTargetNormError):
        relative_l2_error(np.ones((1, 2)), np.zeros((1, 2)))


# -- gradient surgery -----------------------------------------------------------

def test_pcgrad_no_conflict_is_sum():
    pair = pcgrad_merge(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    np.testing.assert_array_equal(pair.merged, [1.0, 1.0])
    assert not pair.in_conflict


def test_pcgrad_hand_worked_conflict():
    # g2' = (0, 1); g1' = (1,0) - (-1/2)(-1,1) = (0.5, 0.5); sum (0.5, 1.5)
    pair = pcgrad_merge(np.array([1.0, 0.0]), np.array([-1.0, 1.0]))
    assert pair.in_conflict
    np.testing.assert_allclose(pair.merged, [0.5, 1.5], atol=1e-15)
    assert pair.merged @ pair.g1 >= 0.0
    assert pair.merged @ pair.g2 >= 0.0


def test_pcgrad_fully_opposed_cancels():
    g = np.array([0.3, -0.7, 1.1])
    pair = pcgrad_merge(g, -g)
    np.testing.assert_allclose(pair.merged, 0.0, atol=1e-15)


def test_pcgrad_both_zero_rejected():
    with pytest.raises(BothZeroError):
        pcgrad_merge(np.zeros(3), np.zeros(3))


def test_pcgrad_one_zero_passes_through():
    g = np.array([1.0, 2.0])
    pair = pcgrad_merge(g, np.zeros(2))
    np.testing.assert_array_equal(pair.merged, g)


def test_pcgrad_contract_random_pairs():
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        dim = int(rng.integers(2, 513))
        g1 = rng.standard_normal(dim)
        g2 = rng.standard_normal(dim)
        pair = pcgrad_merge(g1, g2)
        assert pair.merged @ g1 >= -1e-12
        assert pair.merged @ g2 >= -1e-12
        if g1 @ g2 >= 0:
            np.testing.assert_array_equal(pair.merged, g1 + g2)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=8),
    st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=8),
)
def test_pcgrad_contract_hypothesis(a, b):
    n = min(len(a), len(b))
    g1 = np.asarray(a[:n])
    g2 = np.asarray(b[:n])
    if not (g1 @ g1 or g2 @ g2):
        return
    pair = pcgrad_merge(g1, g2)
    scale = max(1.0, np.linalg.norm(g1) * np.linalg.norm(pair.merged))
    assert pair.merged @ g1 >= -1e-9 * scale
    scale = max(1.0, np.linalg.norm(g2) * np.linalg.norm(pair.merged))
    assert pair.merged @ g2 >= -1e-9 * scale
