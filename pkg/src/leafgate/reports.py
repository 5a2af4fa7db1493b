"""Delimited report emission: UTF-8, LF line endings, 4-decimal values."""

from __future__ import annotations

import csv
import io
from typing import Sequence

from .atomicio import atomic_write_text
from .classifier import CrossValidationResult
from .metrics import ClassificationReport, RegressionReport

CLASSIFICATION = "classification"
IQA = "iqa"
CV_SUMMARY = "cv-summary"

CLASSIFICATION_HEADER = ("split", "accuracy", "precision", "recall", "f1", "averaging")
IQA_HEADER = ("dataset", "rmse", "plcc", "srocc")
CV_HEADER = ("fold", "accuracy", "precision", "recall", "f1", "averaging")


def fmt(x: float) -> str:
    return f"{float(x):.4f}"


def _write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def emit_classification_report(results: Sequence[tuple[str, ClassificationReport]],
                               path) -> None:
    if not results:
        raise ValueError("no classification results to report")
    _write_csv(path, CLASSIFICATION_HEADER,
               [(split, fmt(r.accuracy), fmt(r.precision), fmt(r.recall), fmt(r.f1),
                 r.averaging) for split, r in results])


def emit_iqa_report(results: Sequence[tuple[str, RegressionReport]], path) -> None:
    if not results:
        raise ValueError("no quality results to report")
    _write_csv(path, IQA_HEADER,
               [(dataset, fmt(r.rmse), fmt(r.plcc), fmt(r.srocc))
                for dataset, r in results])


def emit_cv_summary(cv: CrossValidationResult, path) -> None:
    """k per-fold rows plus one mean row."""
    rows = []
    for f in cv.folds:
        r = f.report
        rows.append((f"fold_{f.fold}", fmt(r.accuracy), fmt(r.precision),
                     fmt(r.recall), fmt(r.f1), r.averaging))
    reports = [f.report for f in cv.folds]
    n = len(reports)
    rows.append(("mean",
                 fmt(sum(r.accuracy for r in reports) / n),
                 fmt(sum(r.precision for r in reports) / n),
                 fmt(sum(r.recall for r in reports) / n),
                 fmt(sum(r.f1 for r in reports) / n),
                 reports[0].averaging))
    _write_csv(path, CV_HEADER, rows)


def emit_report(results, kind: str, path) -> None:
    """Dispatch on report kind; see the emit_* functions for row shapes."""
    if kind == CLASSIFICATION:
        emit_classification_report(results, path)
    elif kind == IQA:
        emit_iqa_report(results, path)
    elif kind == CV_SUMMARY:
        emit_cv_summary(results, path)
    else:
        raise ValueError(f"unknown report kind {kind!r}")
