"""Evaluation statistics: confusion matrix, classification report, and the
regression trio RMSE / PLCC / SROCC.

All accumulation is double precision.  Degenerate inputs (zero variance,
all-equal ranks) raise :class:`~leafgate.errors.DegenerateInputError`
instead of propagating NaN.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateInputError

MACRO = "macro"
MICRO = "micro"


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # k×k int64; rows = true class, columns = predicted

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion_matrix(predictions, labels, k: int) -> ConfusionMatrix:
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.shape != labels.shape or predictions.ndim != 1:
        raise ValueError(f"predictions {predictions.shape} and labels {labels.shape} "
                         f"must be equal-length vectors")
    if predictions.size:
        lo = min(predictions.min(), labels.min())
        hi = max(predictions.max(), labels.max())
        if lo < 0 or hi >= k:
            raise IndexError(f"class index {lo if lo < 0 else hi} out of range for k={k}")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (labels, predictions), 1)
    return ConfusionMatrix(counts)


@dataclass(frozen=True)
class ClassificationReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    averaging: str
    per_class_precision: np.ndarray
    per_class_recall: np.ndarray
    per_class_f1: np.ndarray


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num, dtype=np.float64)
    np.divide(num, den, out=out, where=den != 0)
    return out


def classification_report(matrix: ConfusionMatrix, averaging: str = MACRO) -> ClassificationReport:
    """Per-class precision/recall/F1 with the 0/0 := 0 convention;
    macro averages the per-class values, micro pools the counts.
    """
    if averaging not in (MACRO, MICRO):
        raise ValueError(f"unknown averaging {averaging!r}")
    counts = matrix.counts.astype(np.float64)
    total = counts.sum()
    if total == 0:
        raise ValueError("empty confusion matrix")
    tp = np.diag(counts)
    precision = _safe_div(tp, counts.sum(axis=0))
    recall = _safe_div(tp, counts.sum(axis=1))
    f1 = _safe_div(2 * precision * recall, precision + recall)
    accuracy = float(tp.sum() / total)
    if averaging == MACRO:
        p, r, f = float(precision.mean()), float(recall.mean()), float(f1.mean())
    else:
        # single-label multiclass: pooled FP = pooled FN, so micro P = R = accuracy
        p = r = accuracy
        f = accuracy
    return ClassificationReport(accuracy, p, r, f, averaging, precision, recall, f1)


def _as_float_vector(name: str, values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    return arr


def rmse(pred, target) -> float:
    p = _as_float_vector("pred", pred)
    t = _as_float_vector("target", target)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch {p.size} vs {t.size}")
    return float(np.sqrt(np.mean((p - t) ** 2)))


def plcc(pred, target) -> float:
    """Pearson linear correlation via centered sums."""
    p = _as_float_vector("pred", pred)
    t = _as_float_vector("target", target)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch {p.size} vs {t.size}")
    if p.size < 2:
        raise ValueError("correlation needs at least 2 samples")
    pc = p - p.mean()
    tc = t - t.mean()
    denom = np.sqrt((pc * pc).sum() * (tc * tc).sum())
    if denom == 0.0:
        raise DegenerateInputError("zero-variance input; correlation undefined")
    return float((pc * tc).sum() / denom)


def ranks(values) -> np.ndarray:
    """Fractional (average) ranks, 1-based; ties share their mean position."""
    return rankdata(_as_float_vector("values", values), method="average")


def srocc(pred, target) -> float:
    """Spearman rank correlation: PLCC of the fractional ranks (exact under ties)."""
    return plcc(ranks(pred), ranks(target))


@dataclass(frozen=True)
class RegressionReport:
    rmse: float
    plcc: float
    srocc: float


def regression_report(pred, target) -> RegressionReport:
    return RegressionReport(rmse(pred, target), plcc(pred, target), srocc(pred, target))
