"""Quality gate: a small CNN regressor scoring images in [0, 1], its
training recipe, quantile threshold calibration, and the pass/discard rule.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .backbone import SWISH, mbconv, stem
from .errors import TrainingError
from .imaging import ImagePlanar, preprocess, to_input_tensor
from .nn import (
    MSE,
    VALIDATION_LOSS,
    Activation,
    Dense,
    EpochStats,
    GlobalAvgPool,
    LrSchedule,
    Network,
    TrainConfig,
    fit,
)

IQA_PRESETS = ("tiny", "small")
IQA_INPUT_SIZES = (64, 128, 224)

# training recipe defaults
IQA_INITIAL_LR = 1e-2
IQA_DECAY_FACTOR = 0.5
IQA_DECAY_PERIOD_EPOCHS = 15
IQA_MAX_EPOCHS = 100
IQA_BATCH_SIZE = 32
IQA_PATIENCE = 10


def default_iqa_train_config(shuffle_seed: int = 0) -> TrainConfig:
    """The quality-model recipe: Adam at 1e-2, halved every 15 epochs, at
    most 100 epochs, batches of 32, patience 10 on validation loss."""
    return TrainConfig(
        schedule=LrSchedule(IQA_INITIAL_LR, IQA_DECAY_FACTOR, IQA_DECAY_PERIOD_EPOCHS),
        batch_size=IQA_BATCH_SIZE,
        max_epochs=IQA_MAX_EPOCHS,
        patience=IQA_PATIENCE,
        patience_metric=VALIDATION_LOSS,
        shuffle_seed=shuffle_seed,
    )


@dataclass
class IqaModel:
    network: Network
    preset: str
    input_size: int

    def __post_init__(self):
        out = self.network.output_shape((1, 3, self.input_size, self.input_size))
        if out != (1, 1):
            raise ValueError(f"quality head must emit one scalar per image, got {out}")


def _iqa_layers(preset: str):
    if preset == "tiny":
        return (stem(3, 8) + mbconv(8, 16, expand=2, stride=2)
                + mbconv(16, 24, expand=2, stride=2)
                + [GlobalAvgPool(), Dense(24, 16), Activation(SWISH), Dense(16, 1)])
    if preset == "small":
        return (stem(3, 12) + mbconv(12, 24, expand=2, stride=2)
                + mbconv(24, 32, expand=2, stride=2) + mbconv(32, 40, expand=2, stride=1)
                + [GlobalAvgPool(), Dense(40, 24), Activation(SWISH), Dense(24, 1)])
    raise ValueError(f"unknown quality preset {preset!r}; choose from {IQA_PRESETS}")


def build_iqa_model(preset: str = "tiny", input_size: int = 64, seed: int = 0) -> IqaModel:
    if input_size not in IQA_INPUT_SIZES:
        raise ValueError(f"input size {input_size} unsupported; choose from {IQA_INPUT_SIZES}")
    network = Network.initialized(_iqa_layers(preset), seed=seed)
    return IqaModel(network, preset, input_size)


def train_iqa(train_set, val_set, preset: str = "tiny", input_size: int = 64,
              config: TrainConfig | None = None,
              seed: int = 0) -> tuple[IqaModel, list[EpochStats]]:
    """Train a quality regressor on (tensor batch, score column) pairs.

    Scores must be in [0, 1], one per image.  A constant score column can
    never improve validation, so it is flagged up front and training ends
    by patience.
    """
    config = config or default_iqa_train_config()
    x_train, y_train = train_set
    x_val, y_val = val_set
    y_train = _check_scores("train", y_train)
    y_val = _check_scores("validation", y_val)
    if np.ptp(y_train) == 0.0:
        warnings.warn("all training quality scores are identical; the model "
                      "cannot learn a ranking and will stop on patience")
    model = build_iqa_model(preset, input_size, seed=seed)
    best, history = fit(model.network, (x_train, y_train), (x_val, y_val), config, MSE)
    return IqaModel(best, preset, input_size), history


def _check_scores(name: str, scores) -> np.ndarray:
    y = np.asarray(scores, dtype=np.float64).reshape(-1, 1)
    if y.size == 0:
        raise TrainingError(f"{name} set has no quality scores")
    if np.any(~np.isfinite(y)) or y.min() < 0.0 or y.max() > 1.0:
        raise TrainingError(f"{name} quality scores must be finite and in [0, 1]")
    return y


def score_tensor(model: IqaModel, batch: np.ndarray) -> np.ndarray:
    """Scores for a prepared N×3×H×W input batch, clamped to [0, 1]."""
    was = model.network.mode
    try:
        raw = model.network.eval().forward(batch)
    finally:
        model.network.mode = was
    return np.clip(raw.reshape(-1).astype(np.float64), 0.0, 1.0)


def score_quality(model: IqaModel, image: ImagePlanar) -> float:
    """Preprocess, forward, clamp: the scalar quality of one image."""
    tensor = to_input_tensor(preprocess(image, model.input_size))
    return float(score_tensor(model, tensor)[0])


def calibrate_threshold(scores, discard_fraction: float) -> float:
    """Threshold placing exactly floor(q*N) scores strictly below it.

    For a tie-free score set the threshold lands midway between the two
    scores flanking the cut; boundary ties then land on or above the
    threshold, so they pass.
    """
    q = float(discard_fraction)
    if not 0.0 <= q < 1.0:
        raise ValueError(f"discard fraction must be in [0, 1), got {q}")
    s = np.sort(np.asarray(scores, dtype=np.float64).reshape(-1))
    if s.size == 0:
        raise ValueError("cannot calibrate a threshold from zero scores")
    cut = int(math.floor(q * s.size + 1e-9))  # guard q*N landing just under an integer
    if cut == 0:
        return float(s[0])
    cut = min(cut, s.size - 1)
    return float((s[cut - 1] + s[cut]) / 2.0)


@dataclass(frozen=True)
class GateDecision:
    score: float
    threshold: float
    passed: bool


def gate(score: float, threshold: float) -> GateDecision:
    """Boundary-inclusive pass rule: a score equal to the threshold passes."""
    return GateDecision(float(score), float(threshold), bool(score >= threshold))
