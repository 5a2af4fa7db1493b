"""Central finite-difference gradient checking.

32-bit differences are too noisy for tight tolerances, so checks build
parameters and inputs in float64 and run the engine in that dtype.  The
numeric side only ever calls ``forward`` -- it never touches ``backward``,
keeping the two routes independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .losses import cross_entropy_loss, mse_loss
from .network import Network


@dataclass
class GradCheckResult:
    max_rel_error: float
    worst_array: str
    rel_errors: dict[str, float] = field(default_factory=dict)

    def __repr__(self):
        return f"GradCheckResult(max_rel_error={self.max_rel_error:.3e}, worst={self.worst_array!r})"


def _rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)
    return float((np.abs(analytic - numeric) / denom).max()) if analytic.size else 0.0


def _numeric_grad(scalar_fn, array: np.ndarray, h: float) -> np.ndarray:
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = scalar_fn()
        flat[i] = orig - h
        down = scalar_fn()
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * h)
    return grad


def check_layer_gradients(spec, in_shape, seed: int = 0, h: float = 1e-4,
                          training: bool = True, x=None) -> GradCheckResult:
    """Compare analytic and central-difference gradients of one layer.

    The scalar objective is a fixed random projection of the layer output,
    so every output element contributes to every gradient entry.  Pass an
    explicit ``x`` to control the sample points, e.g. to keep a kinked
    activation's inputs away from its non-differentiable point.
    """
    rng = np.random.default_rng(seed)
    params = spec.init_params(rng, np.float64)
    # perturb parameters away from init so e.g. biases are not all zero
    for arr in params.values():
        arr += 0.05 * rng.normal(size=arr.shape)
    if x is None:
        x = rng.normal(size=in_shape)
    else:
        x = np.array(x, dtype=np.float64)
        in_shape = x.shape
    out_shape = spec.output_shape(in_shape)
    proj = rng.normal(size=out_shape)
    layer_rng_seed = int(rng.integers(2 ** 32))  # frozen dropout mask per evaluation

    def run_forward():
        y, cache = spec.forward(params, x, training=training,
                                rng=np.random.default_rng(layer_rng_seed))
        return y, cache

    def scalar():
        y, _ = run_forward()
        return float((proj * y).sum())

    _, cache = run_forward()
    gin, grads = spec.backward(params, cache, proj)

    result = GradCheckResult(0.0, "input")
    targets = [("input", x, gin)]
    for name, arr in params.items():
        if name in grads:
            targets.append((name, arr, grads[name]))
    for name, arr, analytic in targets:
        numeric = _numeric_grad(scalar, arr, h)
        err = _rel_error(analytic, numeric)
        result.rel_errors[name] = err
        if err >= result.max_rel_error:
            result = GradCheckResult(err, name, result.rel_errors)
    return result


def check_network_gradients(network: Network, in_shape, seed: int = 0,
                            h: float = 1e-4, loss_kind: str | None = None,
                            labels=None, targets=None) -> GradCheckResult:
    """End-to-end check of a (float64) network, optionally through a loss."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=in_shape)
    out_shape = network.output_shape(in_shape)
    proj = rng.normal(size=out_shape)
    net_rng_seed = int(rng.integers(2 ** 32))

    def run_forward():
        return network.forward_cached(x, np.random.default_rng(net_rng_seed))

    def objective(y):
        if loss_kind == "cross-entropy":
            return cross_entropy_loss(y, labels)
        if loss_kind == "mse":
            return mse_loss(y, targets)
        return float((proj * y).sum()), proj

    def scalar():
        y, _ = run_forward()
        loss, _ = objective(y)
        return float(loss)

    y, caches = run_forward()
    _, out_grad = objective(y)
    grads, gin = network.backward(caches, out_grad)

    result = GradCheckResult(0.0, "input")
    targets_list = [("input", x, gin)]
    for i, name, arr in network.trainable():
        targets_list.append((f"layer{i}.{name}", arr, grads[i][name]))
    for name, arr, analytic in targets_list:
        numeric = _numeric_grad(scalar, arr, h)
        err = _rel_error(analytic, numeric)
        result.rel_errors[name] = err
        if err >= result.max_rel_error:
            result = GradCheckResult(err, name, result.rel_errors)
    return result
