"""
Numeric kernel: affine maps, softmax family, cross entropy, KL and row normalization
"""
import math

import numpy as np
import pytest

from utils.errors import DimensionError, InvalidArgumentError, LabelError
from utils.kernel import (
    affine_backward, affine_forward, kl_divergence, l2_normalize_backward, l2_normalize_rows,
    log_softmax_with_temperature, relu, relu_backward, softmax_with_temperature, weighted_cross_entropy
)


def test_affine_forward_hand_example():
    y = affine_forward(np.array([[1.0, 1.0]]), np.array([[2.0, 3.0], [4.0, 5.0]]), np.array([1.0, 1.0]))
    assert y.tolist() == [[7.0, 9.0]]


def test_affine_forward_reports_offending_axis():
    with pytest.raises(DimensionError) as exc:
        affine_forward(np.ones((2, 3)), np.ones((4, 2)), np.zeros(2))
    assert exc.value.axis == 1
    with pytest.raises(DimensionError) as exc:
        affine_forward(np.ones((2, 4)), np.ones((4, 2)), np.zeros(3))
    assert exc.value.axis == 0


def test_affine_backward_shapes_and_values():
    x = np.array([[1.0, 2.0]])
    W = np.array([[1.0, 0.0, -1.0], [2.0, 1.0, 0.0]])
    gy = np.array([[1.0, 1.0, 1.0]])
    gx, gW, gb = affine_backward(gy, x, W)
    assert gx.tolist() == [[0.0, 3.0]]
    assert gW.tolist() == [[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]]
    assert gb.tolist() == [1.0, 1.0, 1.0]


def test_relu_subgradient_at_zero_is_zero():
    x = np.array([[-1.0, 0.0, 2.0]])
    assert relu(x).tolist() == [[0.0, 0.0, 2.0]]
    assert relu_backward(np.ones_like(x), x).tolist() == [[0.0, 0.0, 1.0]]


def test_softmax_hand_examples():
    e2 = math.exp(2.0)
    p1 = softmax_with_temperature(np.array([[2.0, 0.0]]), 1.0)
    assert p1[0, 0] == pytest.approx(e2 / (e2 + 1.0), abs=1e-6)
    assert p1[0, 0] == pytest.approx(0.880797, abs=1e-6)
    p2 = softmax_with_temperature(np.array([[2.0, 0.0]]), 2.0)
    assert p2[0].tolist() == pytest.approx([0.731059, 0.268941], abs=1e-6)


def test_softmax_rows_sum_to_one_and_resist_overflow():
    z = np.array([[1000.0, 999.0, -1000.0], [0.0, 0.0, 0.0]])
    p = softmax_with_temperature(z, 0.5)
    assert np.isfinite(p).all()
    assert p.sum(axis=1) == pytest.approx([1.0, 1.0], abs=1e-12)
    assert np.exp(log_softmax_with_temperature(z, 0.5)) == pytest.approx(p, abs=1e-12)


def test_softmax_ignores_a_constant_added_to_each_row():
    rng = np.random.default_rng(5)
    z = rng.standard_normal((4, 6))
    shift = rng.uniform(-50.0, 50.0, size=(4, 1))
    for T in (0.5, 1.0, 3.0):
        assert softmax_with_temperature(z + shift, T) == pytest.approx(softmax_with_temperature(z, T), abs=1e-12)


def test_softmax_rejects_non_positive_temperature():
    with pytest.raises(InvalidArgumentError):
        softmax_with_temperature(np.zeros((1, 2)), 0.0)
    with pytest.raises(ValueError):
        log_softmax_with_temperature(np.zeros((1, 2)), -1.0)


def test_weighted_cross_entropy_hand_example():
    loss, grad = weighted_cross_entropy(np.array([[2.0, 0.0]]), np.array([0]), np.array([1.0, 1.0]))
    assert loss == pytest.approx(-math.log(math.exp(2) / (math.exp(2) + 1)), abs=1e-9)
    assert loss == pytest.approx(0.126928, abs=1e-6)
    p = math.exp(2) / (math.exp(2) + 1)
    assert grad[0].tolist() == pytest.approx([p - 1.0, 1.0 - p], abs=1e-12)


def test_weighted_cross_entropy_empty_batch_and_bad_labels():
    loss, grad = weighted_cross_entropy(np.zeros((0, 3)), np.zeros(0, dtype=int), np.ones(3))
    assert loss == 0.0 and grad.shape == (0, 3)
    with pytest.raises(LabelError):
        weighted_cross_entropy(np.zeros((1, 2)), np.array([2]), np.ones(2))


def test_kl_divergence_values():
    assert kl_divergence(np.array([[1.0, 0.0]]), np.array([[0.5, 0.5]])) == pytest.approx(math.log(2), abs=1e-9)
    p = np.array([[0.2, 0.3, 0.5]])
    assert kl_divergence(p, p) == 0.0
    # zero entries of q are floored, not infinite
    assert math.isfinite(kl_divergence(np.array([[0.5, 0.5]]), np.array([[1.0, 0.0]])))
    with pytest.raises(InvalidArgumentError):
        kl_divergence(np.array([[-0.1, 1.1]]), np.array([[0.5, 0.5]]))


def test_l2_normalize_rows():
    out = l2_normalize_rows(np.array([[3.0, 4.0], [0.0, 0.0]]))
    assert out[0].tolist() == pytest.approx([0.6, 0.8], abs=1e-8)
    assert out[1].tolist() == [0.0, 0.0]


def test_l2_normalize_backward_matches_finite_differences(rng):
    x = rng.standard_normal((3, 4))
    up = rng.standard_normal((3, 4))
    analytic = l2_normalize_backward(up, x)
    numeric = np.zeros_like(x)
    h = 1e-6
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        numeric[idx] = ((l2_normalize_rows(xp) * up).sum() - (l2_normalize_rows(xm) * up).sum()) / (2 * h)
    assert analytic == pytest.approx(numeric, abs=1e-6)
    # zero rows pass the upstream gradient through scaled by 1 / eps without a correction term
    assert np.isfinite(l2_normalize_backward(up[:1], np.zeros((1, 4)))).all()
