"""Generic mini-batch training loop with patience-based early stopping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonFiniteError, TrainingError
from .losses import cross_entropy_loss, mse_loss
from .network import Network
from .optim import AdamState, LrSchedule, adam_step, lr_at_epoch

CROSS_ENTROPY = "cross-entropy"
MSE = "mse"

VALIDATION_LOSS = "validation-loss"
VALIDATION_ACCURACY = "validation-accuracy"

# dataset = (inputs N×C×H×W, targets); class indices for cross-entropy,
# regression targets of the network's output shape for mse
ArrayDataset = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class TrainConfig:
    schedule: LrSchedule
    batch_size: int
    max_epochs: int
    patience: int
    patience_metric: str = VALIDATION_LOSS
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if not 1 <= self.patience <= self.max_epochs:
            raise ValueError("patience must be in [1, max_epochs]")
        if self.patience_metric not in (VALIDATION_LOSS, VALIDATION_ACCURACY):
            raise ValueError(f"unknown patience metric {self.patience_metric!r}")


@dataclass
class EpochStats:
    epoch: int
    lr: float
    train_loss: float
    val_loss: float
    val_accuracy: float | None


class PatienceTracker:
    """Counts consecutive epochs without strict improvement of the metric."""

    def __init__(self, patience: int, higher_is_better: bool):
        self.patience = patience
        self.higher_is_better = higher_is_better
        self.best: float | None = None
        self.best_epoch: int | None = None
        self.bad_epochs = 0

    def update(self, epoch: int, value: float) -> bool:
        improved = self.best is None or (
            value > self.best if self.higher_is_better else value < self.best)
        if improved:
            self.best = value
            self.best_epoch = epoch
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
        return improved

    @property
    def should_stop(self) -> bool:
        return self.bad_epochs >= self.patience


def evaluate(network: Network, dataset: ArrayDataset, loss_kind: str,
             batch_size: int = 64) -> tuple[float, float | None]:
    """(mean loss, accuracy) over a dataset in inference mode; accuracy only
    for classification."""
    x, y = dataset
    mode = network.mode
    network.eval()
    try:
        total = 0.0
        hits = 0
        for start in range(0, len(x), batch_size):
            xb = x[start:start + batch_size]
            yb = y[start:start + batch_size]
            out = network.forward(xb)
            if loss_kind == CROSS_ENTROPY:
                loss, _ = cross_entropy_loss(out, yb)
                hits += int((out.argmax(axis=1) == yb).sum())
            else:
                loss, _ = mse_loss(out, yb)
            total += loss * len(xb)
        val_loss = total / len(x)
        accuracy = hits / len(x) if loss_kind == CROSS_ENTROPY else None
        return val_loss, accuracy
    finally:
        network.mode = mode


def fit(network: Network, train_set: ArrayDataset, val_set: ArrayDataset,
        config: TrainConfig, loss_kind: str) -> tuple[Network, list[EpochStats]]:
    """Train until patience runs out or max_epochs; returns the best-validation
    snapshot (inference mode) and the per-epoch history.

    The passed network is consumed: its parameters hold the final (not
    necessarily best) state afterwards.
    """
    if loss_kind not in (CROSS_ENTROPY, MSE):
        raise ValueError(f"unknown loss kind {loss_kind!r}")
    x, y = train_set
    if len(x) == 0 or len(val_set[0]) == 0:
        raise TrainingError("training and validation sets must be non-empty")
    if config.batch_size > len(x):
        raise TrainingError(f"batch size {config.batch_size} exceeds "
                            f"training set size {len(x)}")
    dtype = network.dtype
    x = np.asarray(x, dtype=dtype)
    if loss_kind == CROSS_ENTROPY:
        y = np.asarray(y, dtype=np.int64)
    else:
        y = np.asarray(y, dtype=dtype)
    val_x = np.asarray(val_set[0], dtype=dtype)
    val_y = (np.asarray(val_set[1], dtype=np.int64) if loss_kind == CROSS_ENTROPY
             else np.asarray(val_set[1], dtype=dtype))

    shuffle_rng = np.random.default_rng(config.shuffle_seed)
    dropout_rng = np.random.default_rng(np.random.SeedSequence((config.shuffle_seed, 0xD0)))
    loss_fn = cross_entropy_loss if loss_kind == CROSS_ENTROPY else mse_loss
    higher_is_better = config.patience_metric == VALIDATION_ACCURACY
    if higher_is_better and loss_kind != CROSS_ENTROPY:
        raise ValueError("validation-accuracy patience needs a classification loss")

    adam = AdamState.for_network(network)
    tracker = PatienceTracker(config.patience, higher_is_better)
    best: Network | None = None
    history: list[EpochStats] = []

    n = len(x)
    for epoch in range(config.max_epochs):
        lr = lr_at_epoch(config.schedule, epoch)
        perm = shuffle_rng.permutation(n)
        network.train()
        running = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            out, caches = network.forward_cached(x[idx], dropout_rng)
            loss, grad = loss_fn(out, y[idx])
            if not np.isfinite(loss):
                raise NonFiniteError(f"non-finite training loss at epoch {epoch}")
            grads, _ = network.backward(caches, grad)
            adam_step(network, grads, adam, lr)
            running += loss * len(idx)
        train_loss = running / n

        val_loss, val_acc = evaluate(network, (val_x, val_y), loss_kind, config.batch_size)
        metric = val_acc if higher_is_better else val_loss
        if tracker.update(epoch, metric):
            best = network.copy()
        history.append(EpochStats(epoch, lr, train_loss, val_loss, val_acc))
        if tracker.should_stop:
            break

    assert best is not None
    return best.eval(), history
