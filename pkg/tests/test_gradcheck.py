"""Analytic vs central-difference gradients for every layer variant.

Each variant is exercised on ≥ 20 random small configurations in double
precision (h = 1e-4); relative errors land near 1e-8, far under the 1e-3
bound asserted here.
"""

from __future__ import annotations

import numpy as np
import pytest

from leafgate.nn import (
    Activation,
    BatchNorm,
    Conv2d,
    Dense,
    DepthwiseConv2d,
    Dropout,
    GlobalAvgPool,
    GlobalMaxPool,
    Network,
    PointwiseConv2d,
    Softmax,
    SqueezeExcite,
    check_layer_gradients,
    check_network_gradients,
)

BOUND = 1e-3
N_CONFIGS = 20


def _configs(build, seed=0):
    """20 (spec, input shape) pairs drawn from a seeded generator."""
    rng = np.random.default_rng(seed)
    return [build(rng) for _ in range(N_CONFIGS)]


def _assert_all_pass(cases):
    worst = 0.0
    for i, (spec, shape) in enumerate(cases):
        result = check_layer_gradients(spec, shape, seed=100 + i)
        worst = max(worst, result.max_rel_error)
        assert result.max_rel_error < BOUND, (
            f"{spec} on {shape}: rel error {result.max_rel_error:.3e}")
    assert worst < BOUND


def test_conv2d_gradients():
    def build(rng):
        ci, co = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        k = int(rng.choice([1, 3]))
        stride = int(rng.choice([1, 2]))
        padding = int(rng.integers(0, 2))
        hw = int(rng.integers(k, k + 3))
        return Conv2d(ci, co, k, stride, padding), (2, ci, hw, hw)
    _assert_all_pass(_configs(build))


def test_depthwise_gradients():
    def build(rng):
        ch = int(rng.integers(1, 5))
        k = int(rng.choice([1, 3]))
        stride = int(rng.choice([1, 2]))
        hw = int(rng.integers(k, k + 3))
        return DepthwiseConv2d(ch, k, stride, int(rng.integers(0, 2))), (2, ch, hw, hw)
    _assert_all_pass(_configs(build))


def test_pointwise_gradients():
    def build(rng):
        ci, co = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        hw = int(rng.integers(1, 5))
        return PointwiseConv2d(ci, co), (2, ci, hw, hw)
    _assert_all_pass(_configs(build))


def test_batchnorm_gradients():
    def build(rng):
        ch = int(rng.integers(1, 5))
        hw = int(rng.integers(2, 5))
        return BatchNorm(ch), (3, ch, hw, hw)
    _assert_all_pass(_configs(build))


def test_batchnorm_dense_input_gradients():
    def build(rng):
        ch = int(rng.integers(1, 6))
        return BatchNorm(ch), (4, ch)
    _assert_all_pass(_configs(build))


def test_swish_gradients():
    def build(rng):
        ch = int(rng.integers(1, 5))
        hw = int(rng.integers(1, 5))
        return Activation("swish"), (2, ch, hw, hw)
    _assert_all_pass(_configs(build))


def test_relu_and_sigmoid_gradients():
    # inputs are kept a safe distance (≥ 100h) from relu's kink at zero,
    # where central differences straddle the non-differentiable point
    rng = np.random.default_rng(0)
    for i in range(N_CONFIGS):
        fn = str(rng.choice(["relu", "sigmoid"]))
        shape = (2, int(rng.integers(1, 5)),
                 int(rng.integers(1, 4)), int(rng.integers(1, 4)))
        x = rng.choice([-1.0, 1.0], size=shape) * rng.uniform(0.05, 1.5, size=shape)
        result = check_layer_gradients(Activation(fn), shape, seed=100 + i, x=x)
        assert result.max_rel_error < BOUND, f"{fn} config {i}: {result}"


def test_squeeze_excite_gradients():
    def build(rng):
        ch = int(rng.integers(2, 7))
        reduction = int(rng.choice([1, 2, 4]))
        hw = int(rng.integers(1, 4))
        return SqueezeExcite(ch, reduction), (2, ch, hw, hw)
    _assert_all_pass(_configs(build))


def test_global_max_pool_gradients():
    def build(rng):
        ch = int(rng.integers(1, 5))
        hw = int(rng.integers(2, 5))
        return GlobalMaxPool(), (2, ch, hw, hw)
    _assert_all_pass(_configs(build))


def test_global_avg_pool_gradients():
    def build(rng):
        ch = int(rng.integers(1, 5))
        hw = int(rng.integers(1, 5))
        return GlobalAvgPool(), (2, ch, hw, hw)
    _assert_all_pass(_configs(build))


def test_dense_gradients():
    def build(rng):
        di, do = int(rng.integers(1, 8)), int(rng.integers(1, 8))
        return Dense(di, do), (3, di)
    _assert_all_pass(_configs(build))


def test_dropout_gradients_with_frozen_mask():
    def build(rng):
        p = float(rng.choice([0.0, 0.2, 0.5]))
        return Dropout(p), (3, int(rng.integers(1, 6)))
    _assert_all_pass(_configs(build))


def test_softmax_cross_entropy_network_gradients():
    rng = np.random.default_rng(7)
    for i in range(N_CONFIGS):
        k = int(rng.integers(2, 6))
        d = int(rng.integers(2, 6))
        net = Network.initialized([Dense(d, k), Softmax()], seed=int(rng.integers(1 << 30)),
                                  dtype=np.float64)
        labels = rng.integers(0, k, size=3)
        result = check_network_gradients(net, (3, d), seed=200 + i,
                                         loss_kind="cross-entropy", labels=labels)
        assert result.max_rel_error < BOUND, f"config {i}: {result.max_rel_error:.3e}"


def test_regression_mse_network_gradients():
    rng = np.random.default_rng(8)
    for i in range(N_CONFIGS):
        d = int(rng.integers(2, 6))
        net = Network.initialized([Dense(d, 1), Activation("sigmoid")],
                                  seed=int(rng.integers(1 << 30)), dtype=np.float64)
        targets = rng.uniform(0.1, 0.9, size=(3, 1))
        result = check_network_gradients(net, (3, d), seed=300 + i,
                                         loss_kind="mse", targets=targets)
        assert result.max_rel_error < BOUND, f"config {i}: {result.max_rel_error:.3e}"


def test_composite_block_gradients():
    """A full bottleneck stack checks cross-layer gradient propagation."""
    layers = [
        Conv2d(3, 4, 3, stride=2, padding=1),
        BatchNorm(4),
        Activation("swish"),
        PointwiseConv2d(4, 8),
        BatchNorm(8),
        Activation("swish"),
        DepthwiseConv2d(8, 3, padding=1),
        SqueezeExcite(8, 4),
        PointwiseConv2d(8, 4),
        GlobalMaxPool(),
        Dense(4, 3),
        Softmax(),
    ]
    net = Network.initialized(layers, seed=5, dtype=np.float64)
    result = check_network_gradients(net, (2, 3, 8, 8), seed=42,
                                     loss_kind="cross-entropy", labels=np.array([0, 2]))
    assert result.max_rel_error < BOUND


def test_gradcheck_uses_double_precision():
    result = check_layer_gradients(Dense(3, 2), (2, 3), seed=0)
    assert result.max_rel_error < 1e-6  # float32 noise would sit near 1e-3


@pytest.mark.parametrize("spec,shape", [
    (Conv2d(2, 3, 3, padding=1), (2, 2, 5, 5)),
    (SqueezeExcite(4, 2), (2, 4, 3, 3)),
])
def test_gradcheck_reports_parameter_names(spec, shape):
    result = check_layer_gradients(spec, shape, seed=1)
    assert "input" in result.rel_errors
    for entry in spec.param_entries():
        if entry.trainable:
            assert entry.name in result.rel_errors
