"""Training loop semantics: patience, best-snapshot return, convergence."""

from __future__ import annotations

import numpy as np
import pytest

from leafgate.errors import TrainingError
from leafgate.nn import (
    CROSS_ENTROPY,
    MSE,
    VALIDATION_ACCURACY,
    VALIDATION_LOSS,
    Activation,
    Dense,
    LrSchedule,
    Network,
    PatienceTracker,
    Softmax,
    TrainConfig,
    evaluate,
    fit,
)


def _blob_data(n=120, seed=0):
    """Two linearly separable 2-d blobs."""
    rng = np.random.default_rng(seed)
    half = n // 2
    x = np.concatenate([rng.normal((-2, -2), 0.5, size=(half, 2)),
                        rng.normal((2, 2), 0.5, size=(half, 2))]).astype(np.float64)
    y = np.concatenate([np.zeros(half, np.int64), np.ones(half, np.int64)])
    perm = rng.permutation(n)
    return x[perm], y[perm]


def _config(**overrides):
    base = dict(schedule=LrSchedule(1e-2), batch_size=16, max_epochs=12,
                patience=12, patience_metric=VALIDATION_LOSS, shuffle_seed=0)
    base.update(overrides)
    return TrainConfig(**base)


def test_patience_tracker_first_update_always_improves():
    t = PatienceTracker(2, higher_is_better=False)
    assert t.update(0, 5.0)
    assert t.best == 5.0 and t.best_epoch == 0 and not t.should_stop


def test_patience_tracker_stops_after_exact_budget():
    t = PatienceTracker(3, higher_is_better=False)
    t.update(0, 1.0)
    for epoch, value in [(1, 1.1), (2, 1.2)]:
        assert not t.update(epoch, value)
        assert not t.should_stop
    t.update(3, 1.3)
    assert t.should_stop
    assert t.best_epoch == 0


def test_patience_tracker_equal_value_is_not_improvement():
    t = PatienceTracker(1, higher_is_better=True)
    t.update(0, 0.5)
    assert not t.update(1, 0.5)
    assert t.should_stop


def test_patience_tracker_reset_on_improvement():
    t = PatienceTracker(2, higher_is_better=True)
    t.update(0, 0.1)
    t.update(1, 0.05)
    assert t.bad_epochs == 1
    t.update(2, 0.2)
    assert t.bad_epochs == 0 and t.best_epoch == 2


def test_fit_converges_on_separable_blobs():
    x, y = _blob_data()
    net = Network.initialized([Dense(2, 8), Activation("swish"), Dense(8, 2),
                               Softmax()], seed=3, dtype=np.float64)
    model, history = fit(net, (x[:90], y[:90]), (x[90:], y[90:]),
                         _config(), CROSS_ENTROPY)
    _, acc = evaluate(model, (x[90:], y[90:]), CROSS_ENTROPY)
    assert acc is not None and acc >= 0.9
    assert len(history) <= 12


def test_fit_with_worsening_metric_stops_early():
    """A huge learning rate quickly stalls improvement; patience 2 must cut
    training well before max_epochs."""
    x, y = _blob_data(80)
    net = Network.initialized([Dense(2, 2), Softmax()], seed=1, dtype=np.float64)
    config = _config(schedule=LrSchedule(10.0), max_epochs=40, patience=2)
    _, history = fit(net, (x[:60], y[:60]), (x[60:], y[60:]), config, CROSS_ENTROPY)
    assert len(history) < 40


def test_fit_returns_best_validation_snapshot():
    """The returned network's validation loss equals the best in history,
    even when later epochs got worse."""
    x, y = _blob_data(100)
    net = Network.initialized([Dense(2, 4), Activation("swish"), Dense(4, 2),
                               Softmax()], seed=7, dtype=np.float64)
    config = _config(schedule=LrSchedule(0.5), max_epochs=15, patience=15)
    model, history = fit(net, (x[:70], y[:70]), (x[70:], y[70:]), config, CROSS_ENTROPY)
    returned_loss, _ = evaluate(model, (x[70:], y[70:]), CROSS_ENTROPY)
    best_recorded = min(h.val_loss for h in history)
    assert returned_loss == pytest.approx(best_recorded, rel=1e-9)


def test_fit_accuracy_patience_returns_best_accuracy_snapshot():
    x, y = _blob_data(100)
    net = Network.initialized([Dense(2, 4), Activation("swish"), Dense(4, 2),
                               Softmax()], seed=2, dtype=np.float64)
    config = _config(patience_metric=VALIDATION_ACCURACY, max_epochs=10, patience=10)
    model, history = fit(net, (x[:70], y[:70]), (x[70:], y[70:]), config, CROSS_ENTROPY)
    _, returned_acc = evaluate(model, (x[70:], y[70:]), CROSS_ENTROPY)
    assert returned_acc == max(h.val_accuracy for h in history)


def test_fit_regression_mse():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, size=(80, 3))
    y = (x.sum(axis=1, keepdims=True) > 0).astype(np.float64)
    net = Network.initialized([Dense(3, 6), Activation("swish"), Dense(6, 1),
                               Activation("sigmoid")], seed=0, dtype=np.float64)
    model, history = fit(net, (x[:60], y[:60]), (x[60:], y[60:]),
                         _config(batch_size=10), MSE)
    assert history[-1].val_accuracy is None
    loss, acc = evaluate(model, (x[60:], y[60:]), MSE)
    assert acc is None and loss < 0.2


def test_fit_accuracy_patience_requires_classification_loss():
    x, y = _blob_data(40)
    net = Network.initialized([Dense(2, 1)], seed=0, dtype=np.float64)
    config = _config(patience_metric=VALIDATION_ACCURACY, batch_size=8)
    with pytest.raises(ValueError):
        fit(net, (x[:30], y[:30].astype(float).reshape(-1, 1)),
            (x[30:], y[30:].astype(float).reshape(-1, 1)), config, MSE)


def test_fit_rejects_oversized_batch():
    x, y = _blob_data(20)
    net = Network.initialized([Dense(2, 2), Softmax()], seed=0)
    with pytest.raises(TrainingError, match="batch size"):
        fit(net, (x[:10], y[:10]), (x[10:], y[10:]), _config(batch_size=11),
            CROSS_ENTROPY)


def test_fit_rejects_empty_sets():
    x, y = _blob_data(20)
    net = Network.initialized([Dense(2, 2), Softmax()], seed=0)
    with pytest.raises(TrainingError):
        fit(net, (x[:0], y[:0]), (x, y), _config(batch_size=1), CROSS_ENTROPY)
    with pytest.raises(TrainingError):
        fit(net, (x, y), (x[:0], y[:0]), _config(batch_size=1), CROSS_ENTROPY)


def test_fit_rejects_unknown_loss():
    x, y = _blob_data(20)
    net = Network.initialized([Dense(2, 2), Softmax()], seed=0)
    with pytest.raises(ValueError):
        fit(net, (x, y), (x, y), _config(batch_size=4), "hinge")


def test_fit_history_records_schedule():
    x, y = _blob_data(60)
    net = Network.initialized([Dense(2, 2), Softmax()], seed=0, dtype=np.float64)
    config = _config(schedule=LrSchedule(1e-2, 0.5, 2), max_epochs=6, patience=6,
                     batch_size=10)
    _, history = fit(net, (x[:40], y[:40]), (x[40:], y[40:]), config, CROSS_ENTROPY)
    assert [h.lr for h in history] == pytest.approx(
        [1e-2, 1e-2, 5e-3, 5e-3, 2.5e-3, 2.5e-3])
    assert [h.epoch for h in history] == list(range(6))


def test_fit_deterministic_given_seeds():
    x, y = _blob_data(60)

    def run():
        net = Network.initialized([Dense(2, 3), Softmax()], seed=4, dtype=np.float64)
        model, history = fit(net, (x[:40], y[:40]), (x[40:], y[40:]),
                             _config(max_epochs=5, patience=5, batch_size=10),
                             CROSS_ENTROPY)
        return model.params[0]["weight"], [h.train_loss for h in history]

    w1, losses1 = run()
    w2, losses2 = run()
    np.testing.assert_array_equal(w1, w2)
    assert losses1 == losses2


def test_validation_config_bounds():
    with pytest.raises(ValueError):
        _config(batch_size=0)
    with pytest.raises(ValueError):
        _config(max_epochs=0)
    with pytest.raises(ValueError):
        _config(patience=0)
    with pytest.raises(ValueError):
        _config(patience=13)  # exceeds max_epochs=12
    with pytest.raises(ValueError):
        _config(patience_metric="training-loss")


def test_evaluate_restores_network_mode():
    x, y = _blob_data(20)
    net = Network.initialized([Dense(2, 2), Softmax()], seed=0).train()
    evaluate(net, (x, y), CROSS_ENTROPY)
    assert net.mode == "training"
