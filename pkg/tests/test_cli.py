"""Command-line integration: every command end to end on a small synthetic
workspace, plus the documented exit codes for each failure family."""

from __future__ import annotations

import json
import subprocess

import numpy as np
import pytest

from leafgate.classifier import ClassifierModel
from leafgate.cli import main
from leafgate.imaging import write_ppm
from leafgate.manifest import ManifestRow, SampleManifest, write_manifest
from leafgate.quality import IqaModel
from leafgate.modelfile import load_model
from leafgate.synthetic import (
    LEAF_CLASS_NAMES,
    synthetic_distortion_dataset,
    synthetic_leaf_dataset,
)

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _to_rgb8(planar):
    return np.clip(np.rint(planar * 255.0), 0, 255).astype(np.uint8).transpose(1, 2, 0)


@pytest.fixture(scope="session")
def ws(tmp_path_factory):
    """One workspace: ingested tree, scored manifest, config, trained models."""
    root = tmp_path_factory.mktemp("cli-ws")

    tree = root / "tree"
    images, labels, registry = synthetic_leaf_dataset(48, 32, seed=11)
    for i, (im, lab) in enumerate(zip(images, labels)):
        d = tree / registry.names[int(lab)]
        d.mkdir(parents=True, exist_ok=True)
        write_ppm(d / f"img_{i:03d}.ppm", _to_rgb8(im))

    cfg = root / "fast.cfg"
    cfg.write_text("# quick settings for tests\n"
                   "train.max_epochs = 3\n"
                   "train.patience = 3\n"
                   "train.batch_size = 8\n")

    manifest = root / "leaves.csv"
    assert main(["ingest", str(tree), "-o", str(manifest)]) == 0

    scored_dir = root / "scored"
    scored_dir.mkdir()
    textures, mos = synthetic_distortion_dataset(40, 32, seed=11)
    rows = []
    for i, (im, m) in enumerate(zip(textures, mos)):
        p = scored_dir / f"tex_{i:03d}.ppm"
        write_ppm(p, _to_rgb8(im))
        rows.append(ManifestRow(str(p), "texture", mos=float(m)))
    scored = root / "scored.csv"
    write_manifest(SampleManifest(rows), scored)

    iqa_model = root / "iqa.model"
    iqa_results = root / "iqa_results.json"
    assert main(["--config", str(cfg), "train-iqa", str(scored),
                 "-o", str(iqa_model), "--results", str(iqa_results)]) == 0

    cls_model = root / "cls.model"
    cls_results = root / "cls_results.json"
    assert main(["--config", str(cfg), "train-classifier", str(manifest),
                 "-o", str(cls_model), "--results", str(cls_results)]) == 0

    one_image = sorted(tree.rglob("*.ppm"))[0]
    return {"root": root, "tree": tree, "cfg": cfg, "manifest": manifest,
            "scored": scored, "iqa_model": iqa_model, "cls_model": cls_model,
            "iqa_results": iqa_results, "cls_results": cls_results,
            "image": one_image}


def test_ingest_reports_per_class_counts(ws, tmp_path, capsys):
    out = tmp_path / "again.csv"
    assert main(["ingest", str(ws["tree"]), "-o", str(out)]) == 0
    stdout = capsys.readouterr().out
    for name in LEAF_CLASS_NAMES:
        assert f"{name}: 12" in stdout
    assert "wrote 48 rows" in stdout
    header = out.read_text().splitlines()[0]
    assert header == "path,label,mos"


def test_trained_model_files_have_expected_kinds(ws):
    assert isinstance(load_model(ws["iqa_model"]), IqaModel)
    cls = load_model(ws["cls_model"])
    assert isinstance(cls, ClassifierModel)
    assert cls.registry.names == tuple(sorted(LEAF_CLASS_NAMES))


def test_training_results_json_payloads(ws):
    cls = json.loads(ws["cls_results"].read_text())
    assert cls["kind"] == "classification"
    assert cls["splits"][0]["split"] == "holdout"
    assert 0.0 <= cls["splits"][0]["accuracy"] <= 1.0
    assert cls["labels"] == sorted(LEAF_CLASS_NAMES)
    assert 1 <= len(cls["history"]) <= 3

    iqa = json.loads(ws["iqa_results"].read_text())
    assert iqa["kind"] == "iqa"
    assert iqa["datasets"][0]["dataset"] == "validation"
    assert len(iqa["scores"]) == len(iqa["targets"]) == 8  # 20% of 40


def test_evaluate_classifier_csv_figure_results(ws, tmp_path, capsys):
    csv_out, figs, res = tmp_path / "clf.csv", tmp_path / "figs", tmp_path / "r.json"
    rc = main(["evaluate", str(ws["manifest"]), "--model", str(ws["cls_model"]),
               "-o", str(csv_out), "--figures", str(figs), "--results", str(res)])
    assert rc == 0
    assert "accuracy" in capsys.readouterr().out
    lines = csv_out.read_text().splitlines()
    assert lines[0] == "split,accuracy,precision,recall,f1,averaging"
    assert len(lines) == 2 and lines[1].endswith(",macro")
    assert (figs / "confusion_matrix.png").read_bytes()[:8] == PNG_MAGIC
    payload = json.loads(res.read_text())
    assert np.asarray(payload["confusion"]).sum() == 48


def test_evaluate_iqa_csv_and_scatter(ws, tmp_path, capsys):
    csv_out, figs = tmp_path / "iqa.csv", tmp_path / "figs"
    rc = main(["evaluate", str(ws["scored"]), "--model", str(ws["iqa_model"]),
               "-o", str(csv_out), "--figures", str(figs)])
    assert rc == 0
    assert "rmse" in capsys.readouterr().out
    assert csv_out.read_text().splitlines()[0] == "dataset,rmse,plcc,srocc"
    assert (figs / "quality_scatter.png").read_bytes()[:8] == PNG_MAGIC


def test_calibrate_gate_writes_threshold_and_histogram(ws, tmp_path, capsys):
    thresh, figs = tmp_path / "threshold.txt", tmp_path / "figs"
    rc = main(["calibrate-gate", str(ws["scored"]), "--model", str(ws["iqa_model"]),
               "--discard-fraction", "0.25", "-o", str(thresh), "--figures", str(figs)])
    assert rc == 0
    assert "of 40 images discarded" in capsys.readouterr().out
    value = float(thresh.read_text())
    assert 0.0 <= value <= 1.0
    assert (figs / "score_histogram.png").read_bytes()[:8] == PNG_MAGIC


def test_predict_diagnosed_then_rejected(ws, capsys):
    rc = main(["predict", str(ws["image"]), "--iqa", str(ws["iqa_model"]),
               "--classifier", str(ws["cls_model"]), "--threshold", "0"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "status: diagnosed" in out
    assert "class: " in out and "top probabilities: " in out

    rc = main(["predict", str(ws["image"]), "--iqa", str(ws["iqa_model"]),
               "--classifier", str(ws["cls_model"]), "--threshold", "2"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "status: rejected" in out and "class: " not in out


def test_predict_threshold_from_config(ws, tmp_path, capsys):
    cfg = tmp_path / "gate.cfg"
    cfg.write_text("gate.threshold = 0.0\n")
    rc = main(["--config", str(cfg), "predict", str(ws["image"]),
               "--iqa", str(ws["iqa_model"]), "--classifier", str(ws["cls_model"])])
    assert rc == 0
    assert "status: diagnosed" in capsys.readouterr().out


def test_predict_is_deterministic(ws, capsys):
    args = ["predict", str(ws["image"]), "--iqa", str(ws["iqa_model"]),
            "--classifier", str(ws["cls_model"]), "--threshold", "0"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    assert capsys.readouterr().out == first


def test_report_renders_classification_results(ws, tmp_path):
    outdir = tmp_path / "rendered"
    assert main(["report", str(ws["cls_results"]), "-o", str(outdir)]) == 0
    assert (outdir / "classification.csv").exists()
    assert (outdir / "training_history.png").read_bytes()[:8] == PNG_MAGIC


def test_report_renders_iqa_results(ws, tmp_path):
    outdir = tmp_path / "rendered"
    assert main(["report", str(ws["iqa_results"]), "-o", str(outdir)]) == 0
    assert (outdir / "iqa.csv").exists()
    assert (outdir / "training_history.png").read_bytes()[:8] == PNG_MAGIC
    assert (outdir / "quality_scatter.png").read_bytes()[:8] == PNG_MAGIC


def test_cross_validate_two_folds_full_outputs(ws, tmp_path, capsys):
    csv_out = tmp_path / "cv.csv"
    figs = tmp_path / "figs"
    res = tmp_path / "cv.json"
    rc = main(["--config", str(ws["cfg"]), "cross-validate", str(ws["manifest"]),
               "--folds", "2", "-o", str(csv_out), "--figures", str(figs),
               "--results", str(res)])
    assert rc == 0
    assert "mean accuracy" in capsys.readouterr().out
    lines = csv_out.read_text().splitlines()
    assert [ln.split(",")[0] for ln in lines] == ["fold", "fold_0", "fold_1", "mean"]
    assert (figs / "fold_accuracy.png").read_bytes()[:8] == PNG_MAGIC
    payload = json.loads(res.read_text())
    assert len(payload["folds"]) == 2 and "mean" in payload

    outdir = tmp_path / "rendered"
    assert main(["report", str(res), "-o", str(outdir)]) == 0
    assert (outdir / "cv_summary.csv").exists()
    assert (outdir / "fold_accuracy.png").read_bytes()[:8] == PNG_MAGIC


def test_console_script_installed():
    proc = subprocess.run(["leafgate", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "Usage:" in proc.stdout


# ----- exit codes ------------------------------------------------------------

def test_unknown_command_exits_2(capsys):
    assert main(["frobnicate"]) == 2
    assert "error:" in capsys.readouterr().err


def test_unknown_config_key_exits_2_with_line_number(ws, tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("train.warp_speed = 9\n")
    rc = main(["--config", str(cfg), "predict", str(ws["image"]),
               "--iqa", str(ws["iqa_model"]), "--classifier", str(ws["cls_model"]),
               "--threshold", "0"])
    assert rc == 2
    err = capsys.readouterr().err
    assert "unknown config key" in err and ":1:" in err


def test_train_iqa_without_scores_exits_2(ws, tmp_path, capsys):
    rc = main(["train-iqa", str(ws["manifest"]), "-o", str(tmp_path / "m")])
    assert rc == 2
    assert "mos column" in capsys.readouterr().err


def test_swapped_model_kinds_exit_2(ws, capsys):
    rc = main(["predict", str(ws["image"]), "--iqa", str(ws["cls_model"]),
               "--classifier", str(ws["iqa_model"]), "--threshold", "0"])
    assert rc == 2
    assert "holds a classifier model" in capsys.readouterr().err


def test_calibrate_rejects_classifier_model(ws, tmp_path, capsys):
    rc = main(["calibrate-gate", str(ws["scored"]), "--model", str(ws["cls_model"]),
               "--discard-fraction", "0.2"])
    assert rc == 2
    assert "classifier model" in capsys.readouterr().err


def test_missing_image_file_exits_3(ws, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    write_manifest(SampleManifest([ManifestRow("no/such/file.ppm", "healthy")]), bad)
    rc = main(["evaluate", str(bad), "--model", str(ws["cls_model"])])
    assert rc == 3
    assert "cannot decode" in capsys.readouterr().err


def test_unknown_label_exits_3(ws, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    write_manifest(SampleManifest([ManifestRow(str(ws["image"]), "zzz")]), bad)
    rc = main(["evaluate", str(bad), "--model", str(ws["cls_model"])])
    assert rc == 3
    assert "not in registry" in capsys.readouterr().err


def test_corrupted_model_exits_4(ws, tmp_path, capsys):
    data = bytearray(ws["cls_model"].read_bytes())
    data[-50] ^= 0x01
    broken = tmp_path / "broken.model"
    broken.write_bytes(bytes(data))
    rc = main(["predict", str(ws["image"]), "--iqa", str(ws["iqa_model"]),
               "--classifier", str(broken), "--threshold", "0"])
    assert rc == 4
    assert "checksum" in capsys.readouterr().err


def test_oversized_batch_exits_5(ws, tmp_path, capsys):
    cfg = tmp_path / "huge.cfg"
    cfg.write_text("train.batch_size = 500\ntrain.max_epochs = 3\ntrain.patience = 3\n")
    rc = main(["--config", str(cfg), "train-classifier", str(ws["manifest"]),
               "-o", str(tmp_path / "m")])
    assert rc == 5
    assert "batch size" in capsys.readouterr().err


def test_threads_zero_exits_2(ws, capsys):
    assert main(["--threads", "0", "ingest", str(ws["tree"]), "-o", "/dev/null"]) == 2


def test_predict_without_threshold_exits_2(ws, capsys):
    rc = main(["predict", str(ws["image"]), "--iqa", str(ws["iqa_model"]),
               "--classifier", str(ws["cls_model"])])
    assert rc == 2
    assert "gate.threshold" in capsys.readouterr().err


def test_report_unknown_kind_exits_2(tmp_path, capsys):
    res = tmp_path / "weird.json"
    res.write_text('{"kind": "heatmap"}\n')
    assert main(["report", str(res), "-o", str(tmp_path / "out")]) == 2
    assert "unknown kind" in capsys.readouterr().err


def test_nonexistent_manifest_exits_2(ws, tmp_path, capsys):
    rc = main(["evaluate", str(tmp_path / "ghost.csv"),
               "--model", str(ws["cls_model"])])
    assert rc == 2
