"""Delimited report output: golden text fixtures with fixed 4-decimal values."""

from __future__ import annotations

import numpy as np
import pytest

from leafgate.classifier import CrossValidationResult, FoldPlan, FoldResult
from leafgate.metrics import ClassificationReport, RegressionReport
from leafgate.reports import (
    CLASSIFICATION,
    CLASSIFICATION_HEADER,
    CV_HEADER,
    CV_SUMMARY,
    IQA,
    IQA_HEADER,
    emit_classification_report,
    emit_cv_summary,
    emit_iqa_report,
    emit_report,
    fmt,
)


def _clf_report(acc, p, r, f, averaging="macro"):
    return ClassificationReport(acc, p, r, f, averaging,
                                np.array([p]), np.array([r]), np.array([f]))


def test_fmt_four_decimals():
    assert fmt(0.5) == "0.5000"
    assert fmt(1) == "1.0000"
    assert fmt(0.97499) == "0.9750"
    assert fmt(1 / 3) == "0.3333"


def test_classification_golden_text(tmp_path):
    path = tmp_path / "clf.csv"
    emit_classification_report(
        [("train", _clf_report(1.0, 1.0, 1.0, 1.0)),
         ("holdout", _clf_report(0.975, 0.97123, 0.96875, 0.96999))], path)
    assert path.read_text(encoding="utf-8") == (
        "split,accuracy,precision,recall,f1,averaging\n"
        "train,1.0000,1.0000,1.0000,1.0000,macro\n"
        "holdout,0.9750,0.9712,0.9688,0.9700,macro\n")


def test_iqa_golden_text(tmp_path):
    path = tmp_path / "iqa.csv"
    emit_iqa_report([("validation", RegressionReport(0.0798, 0.95012, 0.96074))],
                    path)
    assert path.read_text(encoding="utf-8") == (
        "dataset,rmse,plcc,srocc\n"
        "validation,0.0798,0.9501,0.9607\n")


def _cv(accuracies):
    folds = [FoldResult(i, _clf_report(a, a, a, a), [], np.arange(3))
             for i, a in enumerate(accuracies)]
    plan = FoldPlan(tuple(np.arange(3) for _ in accuracies), seed=0)
    return CrossValidationResult(folds, plan, seconds=1.0)


def test_cv_summary_ten_folds_plus_mean(tmp_path):
    accs = [0.95, 1.0, 0.975, 0.95, 1.0, 0.925, 1.0, 0.975, 0.95, 1.0]
    path = tmp_path / "cv.csv"
    emit_cv_summary(_cv(accs), path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 12  # header + 10 folds + mean
    assert lines[0] == ",".join(CV_HEADER)
    for i, a in enumerate(accs):
        assert lines[1 + i] == f"fold_{i},{fmt(a)},{fmt(a)},{fmt(a)},{fmt(a)},macro"
    mean = sum(accs) / len(accs)
    assert lines[-1] == f"mean,{fmt(mean)},{fmt(mean)},{fmt(mean)},{fmt(mean)},macro"


def test_cv_mean_row_matches_arithmetic_mean(tmp_path):
    path = tmp_path / "cv.csv"
    emit_cv_summary(_cv([0.9, 1.0]), path)
    assert path.read_text().splitlines()[-1].split(",")[1] == "0.9500"


def test_dispatcher_routes_each_kind(tmp_path):
    emit_report([("t", _clf_report(1, 1, 1, 1))], CLASSIFICATION, tmp_path / "a.csv")
    emit_report([("d", RegressionReport(0, 1, 1))], IQA, tmp_path / "b.csv")
    emit_report(_cv([1.0, 1.0]), CV_SUMMARY, tmp_path / "c.csv")
    assert (tmp_path / "a.csv").read_text().startswith(",".join(CLASSIFICATION_HEADER))
    assert (tmp_path / "b.csv").read_text().startswith(",".join(IQA_HEADER))
    assert (tmp_path / "c.csv").read_text().startswith(",".join(CV_HEADER))


def test_dispatcher_rejects_unknown_kind(tmp_path):
    with pytest.raises(ValueError, match="unknown report kind"):
        emit_report([], "heatmap", tmp_path / "x.csv")


def test_empty_results_rejected(tmp_path):
    with pytest.raises(ValueError):
        emit_classification_report([], tmp_path / "x.csv")
    with pytest.raises(ValueError):
        emit_iqa_report([], tmp_path / "x.csv")


def test_lf_line_endings_no_trailing_blank(tmp_path):
    path = tmp_path / "clf.csv"
    emit_classification_report([("s", _clf_report(1, 1, 1, 1))], path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.endswith(b"\n") and not raw.endswith(b"\n\n")
