"""Hand-computed oracles for the two training losses."""

from __future__ import annotations

import math

import numpy as np
import pytest

from leafgate.nn import cross_entropy_loss, mse_loss


def test_cross_entropy_hand_oracle_single_row():
    p = np.array([[0.5, 0.25, 0.25]])
    loss, grad = cross_entropy_loss(p, [0])
    assert loss == pytest.approx(math.log(2.0), rel=1e-12)
    np.testing.assert_allclose(grad, [[-2.0, 0.0, 0.0]], rtol=1e-12)


def test_cross_entropy_hand_oracle_two_rows():
    p = np.array([[0.25, 0.75], [0.5, 0.5]])
    loss, grad = cross_entropy_loss(p, [0, 1])
    # mean of -ln(1/4) and -ln(1/2) = (2 ln 2 + ln 2) / 2
    assert loss == pytest.approx(1.5 * math.log(2.0), rel=1e-12)
    np.testing.assert_allclose(grad, [[-2.0, 0.0], [0.0, -1.0]], rtol=1e-12)


def test_cross_entropy_gradient_formula_random(rng):
    p = rng.dirichlet(np.ones(5), size=8)
    labels = rng.integers(0, 5, size=8)
    _, grad = cross_entropy_loss(p, labels)
    expected = np.zeros_like(p)
    expected[np.arange(8), labels] = -1.0 / (8 * p[np.arange(8), labels])
    np.testing.assert_allclose(grad, expected, rtol=1e-12)


def test_cross_entropy_clamps_zero_probability():
    p = np.array([[0.0, 1.0]])
    loss, grad = cross_entropy_loss(p, [0])
    assert math.isfinite(loss) and loss > 20  # -ln(1e-12) ≈ 27.6
    assert np.all(np.isfinite(grad))


def test_cross_entropy_rejects_non_probability_rows():
    with pytest.raises(ValueError, match="row 0"):
        cross_entropy_loss(np.array([[0.9, 0.3]]), [0])


def test_cross_entropy_rejects_out_of_range_labels():
    p = np.array([[0.5, 0.5]])
    with pytest.raises(IndexError):
        cross_entropy_loss(p, [2])
    with pytest.raises(IndexError):
        cross_entropy_loss(p, [-1])


def test_cross_entropy_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        cross_entropy_loss(np.array([[0.5, 0.5]]), [0, 1])


def test_mse_hand_oracle():
    loss, grad = mse_loss(np.array([1.0, 2.0]), np.array([0.0, 0.0]))
    assert loss == pytest.approx(2.5, rel=1e-15)
    np.testing.assert_allclose(grad, [1.0, 2.0], rtol=1e-15)


def test_mse_zero_at_exact_match(rng):
    x = rng.normal(size=(4, 1))
    loss, grad = mse_loss(x, x.copy())
    assert loss == 0.0
    np.testing.assert_array_equal(grad, np.zeros_like(x))


def test_mse_matches_direct_formula_random(rng):
    pred = rng.normal(size=(6, 3))
    target = rng.normal(size=(6, 3))
    loss, grad = mse_loss(pred, target)
    assert loss == pytest.approx(float(np.mean((pred - target) ** 2)), rel=1e-12)
    np.testing.assert_allclose(grad, 2.0 * (pred - target) / pred.size, rtol=1e-12)


def test_mse_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        mse_loss(np.zeros((2, 1)), np.zeros((3, 1)))
