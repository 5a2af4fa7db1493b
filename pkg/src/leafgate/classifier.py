"""Disease classifier: compact max-pool-headed presets, the training recipe
with its stratified holdout, prediction, and k-fold cross-validation.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .augment import AugmentConfig, AugmentParams, augment_batch, item_seed
from .backbone import mbconv, stem
from .errors import StratificationError, TrainingError
from .imaging import ImagePlanar, check_planar, preprocess
from .metrics import MACRO, ClassificationReport, classification_report, confusion_matrix
from .nn import (
    CROSS_ENTROPY,
    VALIDATION_ACCURACY,
    Dense,
    EpochStats,
    GlobalMaxPool,
    LrSchedule,
    Network,
    Softmax,
    TrainConfig,
    fit,
)

CLASSIFIER_PRESETS = ("mobile", "large")

# training recipe defaults; the two presets differ only in batch size
CLASSIFIER_INITIAL_LR = 3e-3
CLASSIFIER_DECAY_FACTOR = 0.5
CLASSIFIER_DECAY_PERIOD_EPOCHS = 20
CLASSIFIER_BATCH_SIZE = {"mobile": 32, "large": 16}
CLASSIFIER_PATIENCE = 3
CLASSIFIER_MAX_EPOCHS = 60
HOLDOUT_FRACTION = 0.2
MIN_SAMPLES_PER_CLASS = 5


@dataclass(frozen=True)
class LabelRegistry:
    """Ordered class names; indices are stable across save and load."""

    names: tuple[str, ...]
    declared_total: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if len(set(self.names)) != len(self.names):
            raise ValueError("label names must be unique")
        if not self.names:
            raise ValueError("label registry cannot be empty")

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"label {name!r} not in registry") from None

    @classmethod
    def numbered(cls, k: int) -> "LabelRegistry":
        return cls(tuple(f"class_{i}" for i in range(k)))


def default_classifier_train_config(preset: str = "mobile",
                                    shuffle_seed: int = 0) -> TrainConfig:
    """The identification recipe: Adam at 3e-3 halved every 20 epochs,
    batches of 32 (mobile) or 16 (large), patience 3 on validation accuracy."""
    if preset not in CLASSIFIER_PRESETS:
        raise ValueError(f"unknown classifier preset {preset!r}; choose from {CLASSIFIER_PRESETS}")
    return TrainConfig(
        schedule=LrSchedule(CLASSIFIER_INITIAL_LR, CLASSIFIER_DECAY_FACTOR,
                            CLASSIFIER_DECAY_PERIOD_EPOCHS),
        batch_size=CLASSIFIER_BATCH_SIZE[preset],
        max_epochs=CLASSIFIER_MAX_EPOCHS,
        patience=CLASSIFIER_PATIENCE,
        patience_metric=VALIDATION_ACCURACY,
        shuffle_seed=shuffle_seed,
    )


@dataclass
class ClassifierModel:
    network: Network
    preset: str
    input_size: int
    registry: LabelRegistry

    def __post_init__(self):
        out = self.network.output_shape((1, 3, self.input_size, self.input_size))
        if out != (1, len(self.registry)):
            raise ValueError(f"classifier head emits {out}, registry has "
                             f"{len(self.registry)} classes")


def _classifier_layers(preset: str, num_classes: int):
    if preset == "mobile":
        return (stem(3, 12)
                + mbconv(12, 24, expand=2, stride=2)
                + mbconv(24, 32, expand=2, stride=2)
                + mbconv(32, 48, expand=2, stride=2)
                + [GlobalMaxPool(), Dense(48, num_classes), Softmax()])
    if preset == "large":
        return (stem(3, 24)
                + mbconv(24, 48, expand=2, stride=2) + mbconv(48, 48, expand=2, stride=1)
                + mbconv(48, 64, expand=2, stride=2) + mbconv(64, 64, expand=2, stride=1)
                + mbconv(64, 96, expand=2, stride=2) + mbconv(96, 96, expand=2, stride=1)
                + [GlobalMaxPool(), Dense(96, num_classes), Softmax()])
    raise ValueError(f"unknown classifier preset {preset!r}; choose from {CLASSIFIER_PRESETS}")


def build_classifier(preset: str, labels, input_size: int = 64,
                     seed: int = 0) -> ClassifierModel:
    """``labels`` is a :class:`LabelRegistry` or a class count."""
    registry = labels if isinstance(labels, LabelRegistry) else LabelRegistry.numbered(int(labels))
    if len(registry) < 2:
        raise ValueError("a classifier needs at least 2 classes")
    network = Network.initialized(_classifier_layers(preset, len(registry)), seed=seed)
    return ClassifierModel(network, preset, input_size, registry)


def prepare_images(images, input_size: int) -> np.ndarray:
    """Run the preprocessing pipeline and stack into one N×3×S×S array."""
    return np.stack([preprocess(check_planar(im), input_size) for im in images])


def input_batch(planar_stack: np.ndarray) -> np.ndarray:
    """N×3×H×W planar [0,1] stack to the zero-centered float32 input batch."""
    return ((np.asarray(planar_stack) - 0.5) * 2.0).astype(np.float32)


def stratified_holdout(labels: np.ndarray, fraction: float,
                       seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-class split; every represented class keeps at least one holdout item."""
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    train, hold = [], []
    for cls in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        n_hold = max(1, int(fraction * idx.size))
        hold.append(idx[:n_hold])
        train.append(idx[n_hold:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(hold))


def _check_class_counts(labels: np.ndarray, registry: LabelRegistry) -> None:
    counts = np.bincount(labels, minlength=len(registry))
    if labels.size and (labels.min() < 0 or labels.max() >= len(registry)):
        raise IndexError(f"label index out of range for {len(registry)} classes")
    absent = [registry.names[i] for i in np.flatnonzero(counts == 0)]
    if absent:
        warnings.warn(f"{len(absent)} registry classes have no training samples: "
                      f"{', '.join(absent[:5])}{'...' if len(absent) > 5 else ''}")
    thin = np.flatnonzero((counts > 0) & (counts < MIN_SAMPLES_PER_CLASS))
    if thin.size:
        worst = registry.names[int(thin[0])]
        raise StratificationError(
            f"class {worst!r} has only {int(counts[thin[0]])} samples; "
            f"at least {MIN_SAMPLES_PER_CLASS} per represented class are needed "
            f"for a stratified holdout")


@dataclass
class TrainingRun:
    model: ClassifierModel
    history: list[EpochStats]
    train_indices: np.ndarray
    holdout_indices: np.ndarray
    # (dataset index, sampled parameters); None parameters mark retained originals
    augmented: list[tuple[int, AugmentParams | None]] = field(default_factory=list)

    @property
    def holdout_accuracy(self) -> float:
        return max(h.val_accuracy for h in self.history)


def train_classifier(images, labels, registry: LabelRegistry, preset: str = "mobile",
                     input_size: int = 64, config: TrainConfig | None = None,
                     augment_config: AugmentConfig | None = None,
                     augment_factor: int = 1, seed: int = 0, workers: int = 1,
                     preprocessed: bool = False) -> TrainingRun:
    """Train with an internal stratified 20% holdout for early stopping.

    Augmentation, when configured, touches only the training split; the
    ``augmented`` log records which dataset rows were transformed.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if len(images) != labels.size:
        raise ValueError(f"{len(images)} images but {labels.size} labels")
    _check_class_counts(labels, registry)
    planar = np.asarray(images) if preprocessed else prepare_images(images, input_size)
    train_idx, hold_idx = stratified_holdout(labels, HOLDOUT_FRACTION, seed)
    config = config or default_classifier_train_config(preset, shuffle_seed=seed)

    augmented_log: list[tuple[int, AugmentParams | None]] = []
    if augment_config is not None:
        samples = augment_batch(planar[train_idx], augment_config, master_seed=seed,
                                factor=augment_factor, workers=workers)
        x_train = input_batch(np.stack([s.image for s in samples]))
        y_train = labels[train_idx[[s.source_index for s in samples]]]
        augmented_log = [(int(train_idx[s.source_index]), s.params) for s in samples]
    else:
        x_train = input_batch(planar[train_idx])
        y_train = labels[train_idx]

    model = build_classifier(preset, registry, input_size, seed=seed)
    best, history = fit(model.network, (x_train, y_train),
                        (input_batch(planar[hold_idx]), labels[hold_idx]),
                        config, CROSS_ENTROPY)
    trained = ClassifierModel(best, preset, input_size, registry)
    return TrainingRun(trained, history, train_idx, hold_idx, augmented_log)


def predict_batch(model: ClassifierModel,
                  batch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Argmax indices (first-lowest on ties) and probability rows for a
    prepared input batch."""
    was = model.network.mode
    try:
        probs = model.network.eval().forward(batch)
    finally:
        model.network.mode = was
    return probs.argmax(axis=1), probs


def predict(model: ClassifierModel, image: ImagePlanar) -> tuple[int, np.ndarray]:
    planar = preprocess(check_planar(image), model.input_size)
    indices, probs = predict_batch(model, input_batch(planar[None]))
    return int(indices[0]), probs[0]


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[np.ndarray, ...]
    seed: int
    stratified: bool = True

    @property
    def k(self) -> int:
        return len(self.folds)

    def train_indices(self, fold: int) -> np.ndarray:
        others = [f for i, f in enumerate(self.folds) if i != fold]
        return np.sort(np.concatenate(others))


def stratified_kfold(labels, k: int, seed: int = 0) -> FoldPlan:
    """Per-class shuffled dealing with a global rotating cursor, so folds
    are exact partitions, per-class counts differ by at most 1, and fold
    sizes stay equal whenever k divides the total."""
    labels = np.asarray(labels, dtype=np.int64)
    if k < 2:
        raise ValueError(f"k-fold needs k >= 2, got {k}")
    if k > labels.size:
        raise ValueError(f"cannot split {labels.size} samples into {k} folds")
    rng = np.random.default_rng(seed)
    buckets: list[list[int]] = [[] for _ in range(k)]
    cursor = 0
    for cls in np.unique(labels):
        for j in rng.permutation(np.flatnonzero(labels == cls)):
            buckets[cursor % k].append(int(j))
            cursor += 1
    folds = tuple(np.sort(np.asarray(b, dtype=np.int64)) for b in buckets)
    return FoldPlan(folds, seed)


@dataclass
class FoldResult:
    fold: int
    report: ClassificationReport
    history: list[EpochStats]
    test_indices: np.ndarray


@dataclass
class CrossValidationResult:
    folds: list[FoldResult]
    plan: FoldPlan
    seconds: float

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([f.report.accuracy for f in self.folds])

    @property
    def mean_accuracy(self) -> float:
        return float(self.accuracies.mean())

    @property
    def stddev_accuracy(self) -> float:
        return float(self.accuracies.std())


def cross_validate(images, labels, registry: LabelRegistry, k: int = 10,
                   preset: str = "mobile", input_size: int = 64,
                   config: TrainConfig | None = None,
                   augment_config: AugmentConfig | None = None,
                   augment_factor: int = 1, seed: int = 0,
                   workers: int = 1) -> CrossValidationResult:
    """Train on k-1 folds (internal holdout and augmentation as in
    :func:`train_classifier`) and score the held-out fold, k times."""
    labels = np.asarray(labels, dtype=np.int64)
    planar = prepare_images(images, input_size)
    plan = stratified_kfold(labels, k, seed)
    started = time.perf_counter()
    results = []
    for fold, test_idx in enumerate(plan.folds):
        train_idx = plan.train_indices(fold)
        fold_seed = item_seed(seed, fold, 0xF01D)
        try:
            run = train_classifier(planar[train_idx], labels[train_idx], registry,
                                   preset, input_size, config, augment_config,
                                   augment_factor, seed=fold_seed, workers=workers,
                                   preprocessed=True)
        except TrainingError as e:
            raise TrainingError(f"fold {fold}: {e}") from e
        pred, _ = predict_batch(run.model, input_batch(planar[test_idx]))
        report = classification_report(
            confusion_matrix(pred, labels[test_idx], len(registry)), MACRO)
        results.append(FoldResult(fold, report, run.history, test_idx))
    return CrossValidationResult(results, plan, time.perf_counter() - started)
