"""Training losses: cross-entropy over probability rows and mean squared error.

Both return ``(loss, grad)`` where ``grad`` is the derivative with respect to
the loss input, ready to feed ``Network.backward``.
"""

from __future__ import annotations

import numpy as np

PROB_CLAMP = 1e-12
ROW_SUM_TOL = 1e-4


def cross_entropy_loss(probabilities: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood of the correct class.

    ``probabilities`` is N×K of per-row probabilities (post-softmax); the
    gradient composes with the softmax backward pass to the usual
    ``(p - onehot) / N`` logit gradient.
    """
    p = np.asarray(probabilities)
    labels = np.asarray(labels, dtype=np.int64)
    if p.ndim != 2 or labels.shape != (p.shape[0],):
        raise ValueError(f"expected N×K probabilities with N labels, "
                         f"got {p.shape} and {labels.shape}")
    n, k = p.shape
    row_sums = p.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > ROW_SUM_TOL):
        worst = int(np.abs(row_sums - 1.0).argmax())
        raise ValueError(f"row {worst} sums to {row_sums[worst]:.6f}, not a probability vector")
    if labels.min(initial=0) < 0 or labels.max(initial=-1) >= k:
        raise IndexError(f"label out of range for {k} classes")
    correct = np.clip(p[np.arange(n), labels], PROB_CLAMP, None)
    loss = float(-np.log(correct).mean())
    grad = np.zeros_like(p)
    grad[np.arange(n), labels] = -1.0 / (n * correct)
    return loss, grad


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"prediction shape {pred.shape} != target shape {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff.astype(np.float64) ** 2))
    grad = (2.0 / pred.size) * diff
    return loss, grad
