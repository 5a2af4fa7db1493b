"""Command-line surface: ingest, train, evaluate, calibrate, predict, report.

Exit codes: 0 success, 2 usage, 3 data, 4 model file, 5 training failure.
"""

from __future__ import annotations

import json
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field

import click
import numpy as np

from .atomicio import atomic_write_text
from .classifier import (
    ClassifierModel,
    CrossValidationResult,
    LabelRegistry,
    cross_validate,
    default_classifier_train_config,
    input_batch,
    predict_batch,
    prepare_images,
    train_classifier,
)
from .config import augment_config_from, read_config, train_config_from
from .decode import is_decodable, load_planar
from .errors import LeafgateError, UsageError
from .manifest import SampleManifest, ingest as ingest_tree, read_manifest, write_manifest
from .metrics import (
    MACRO,
    classification_report,
    confusion_matrix,
    regression_report,
)
from .modelfile import KIND_CLASSIFIER, KIND_IQA, load_model, save_model
from .nn import EpochStats
from .plantvillage import plantvillage_registry
from .quality import (
    IqaModel,
    calibrate_threshold,
    default_iqa_train_config,
    score_tensor,
    train_iqa,
)
from .reports import (
    CLASSIFICATION,
    CLASSIFICATION_HEADER,
    CV_HEADER,
    CV_SUMMARY,
    IQA,
    IQA_HEADER,
    emit_cv_summary,
    emit_classification_report,
    emit_iqa_report,
    fmt,
)
from .workflow import REJECTED, run_workflow

PLANTVILLAGE = "plantvillage"
AUTO = "auto"


@dataclass
class AppContext:
    cfg: dict[str, str] = field(default_factory=dict)
    seed: int = 0
    threads: int = 1


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Flat key = value settings file.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Master seed for every random choice.")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker threads for augmentation (1 = reference mode).")
@click.pass_context
def cli(ctx, config_path, seed, threads):
    """Quality-gated foliar disease identification pipeline."""
    if threads < 1:
        raise UsageError("--threads must be at least 1")
    ctx.obj = AppContext(read_config(config_path) if config_path else {}, seed, threads)


def _echo_warnings(captured) -> None:
    for w in captured:
        click.echo(f"warning: {w.message}", err=True)


def _registry_for(manifest: SampleManifest, choice: str) -> LabelRegistry:
    if choice == PLANTVILLAGE or (choice == AUTO and manifest.registry_name == PLANTVILLAGE):
        return plantvillage_registry()
    names = sorted({r.label for r in manifest.rows})
    if not names:
        raise UsageError("manifest has no rows to derive a registry from")
    return LabelRegistry(tuple(names))


def _load_images(manifest: SampleManifest) -> list:
    return [load_planar(p) for p in manifest.paths]


def _input_size(ctx: AppContext, option: int | None, default: int = 64) -> int:
    if option is not None:
        return option
    return int(ctx.cfg.get("model.input_size", default))


def _preset(ctx: AppContext, option: str | None, default: str) -> str:
    if option is not None:
        return option
    return ctx.cfg.get("model.preset", default)


def _write_results(path, payload: dict) -> None:
    if path:
        atomic_write_text(path, json.dumps(payload, indent=2) + "\n")
        click.echo(f"results written to {path}")


def _history_dicts(history: list[EpochStats]) -> list[dict]:
    return [asdict(h) for h in history]


@cli.command()
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False),
              help="Manifest CSV to write.")
@click.option("--registry", "registry_choice", type=click.Choice([AUTO, PLANTVILLAGE]),
              default=AUTO, show_default=True)
@click.pass_obj
def ingest(app, root, output, registry_choice):
    """Scan a class-per-subdirectory image tree into a manifest."""
    if registry_choice == PLANTVILLAGE:
        registry = plantvillage_registry()
        registry_name = PLANTVILLAGE
    else:
        names = sorted(e for e in os.listdir(root)
                       if os.path.isdir(os.path.join(root, e)))
        if not names:
            raise UsageError(f"{root} has no class subdirectories")
        registry = LabelRegistry(tuple(names))
        registry_name = None
    with warnings.catch_warnings(record=True) as captured:
        warnings.simplefilter("always")
        manifest, report = ingest_tree(root, registry, decode_check=is_decodable)
    manifest.registry_name = registry_name
    write_manifest(manifest, output)
    for name, count in sorted(report.per_class.items()):
        if count:
            click.echo(f"{name}: {count}")
    _echo_warnings(captured)
    click.echo(f"wrote {len(manifest)} rows to {output}")


@cli.command("train-iqa")
@click.argument("manifest_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False),
              help="Model file to write.")
@click.option("--preset", type=click.Choice(["tiny", "small"]), default=None)
@click.option("--input-size", type=int, default=None)
@click.option("--val-fraction", type=float, default=0.2, show_default=True)
@click.option("--results", "results_path", type=click.Path(dir_okay=False), default=None,
              help="Metrics and history JSON for the report command.")
@click.pass_obj
def train_iqa_cmd(app, manifest_path, output, preset, input_size, val_fraction, results_path):
    """Train the quality model on a manifest with a mos column."""
    manifest = read_manifest(manifest_path)
    if not manifest.has_mos:
        raise UsageError(f"{manifest_path} has no quality scores; train-iqa needs a mos column")
    if not 0.0 < val_fraction < 1.0:
        raise UsageError("--val-fraction must be in (0, 1)")
    preset = _preset(app, preset, "tiny")
    size = _input_size(app, input_size)
    mos = manifest.mos_array()
    x = input_batch(prepare_images(_load_images(manifest), size))
    n_val = max(1, int(round(val_fraction * len(manifest))))
    perm = np.random.default_rng(app.seed).permutation(len(manifest))
    va, tr = perm[:n_val], perm[n_val:]
    config = train_config_from(app.cfg, default_iqa_train_config(shuffle_seed=app.seed))
    with warnings.catch_warnings(record=True) as captured:
        warnings.simplefilter("always")
        model, history = train_iqa((x[tr], mos[tr]), (x[va], mos[va]),
                                   preset=preset, input_size=size,
                                   config=config, seed=app.seed)
    _echo_warnings(captured)
    save_model(model, output)
    scores = score_tensor(model, x[va])
    report = regression_report(scores, mos[va])
    click.echo(f"trained {preset} quality model for {len(history)} epochs")
    click.echo(f"validation rmse={fmt(report.rmse)} plcc={fmt(report.plcc)} "
               f"srocc={fmt(report.srocc)}")
    click.echo(f"model written to {output}")
    _write_results(results_path, {
        "kind": IQA,
        "datasets": [{"dataset": "validation", "rmse": report.rmse,
                      "plcc": report.plcc, "srocc": report.srocc}],
        "history": _history_dicts(history),
        "scores": scores.tolist(),
        "targets": mos[va].tolist(),
    })


@cli.command("train-classifier")
@click.argument("manifest_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False),
              help="Model file to write.")
@click.option("--preset", type=click.Choice(["mobile", "large"]), default=None)
@click.option("--input-size", type=int, default=None)
@click.option("--registry", "registry_choice", type=click.Choice([AUTO, PLANTVILLAGE]),
              default=AUTO, show_default=True)
@click.option("--results", "results_path", type=click.Path(dir_okay=False), default=None,
              help="Metrics and history JSON for the report command.")
@click.pass_obj
def train_classifier_cmd(app, manifest_path, output, preset, input_size,
                         registry_choice, results_path):
    """Train the disease classifier with its stratified 20% holdout."""
    manifest = read_manifest(manifest_path)
    registry = _registry_for(manifest, registry_choice)
    labels = manifest.label_indices(registry)
    preset = _preset(app, preset, "mobile")
    size = _input_size(app, input_size)
    config = train_config_from(
        app.cfg, default_classifier_train_config(preset, shuffle_seed=app.seed))
    augment_config, factor = augment_config_from(app.cfg)
    with warnings.catch_warnings(record=True) as captured:
        warnings.simplefilter("always")
        run = train_classifier(_load_images(manifest), labels, registry,
                               preset=preset, input_size=size, config=config,
                               augment_config=augment_config, augment_factor=factor,
                               seed=app.seed, workers=app.threads)
    _echo_warnings(captured)
    save_model(run.model, output)
    click.echo(f"trained {preset} classifier for {len(run.history)} epochs; "
               f"holdout accuracy {fmt(run.holdout_accuracy)}")
    click.echo(f"model written to {output}")
    _write_results(results_path, {
        "kind": CLASSIFICATION,
        "splits": [{"split": "holdout", "accuracy": run.holdout_accuracy,
                    "precision": float("nan"), "recall": float("nan"),
                    "f1": float("nan"), "averaging": MACRO}],
        "history": _history_dicts(run.history),
        "labels": list(registry.names),
    })


@cli.command("cross-validate")
@click.argument("manifest_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--folds", "k", type=int, default=10, show_default=True)
@click.option("--preset", type=click.Choice(["mobile", "large"]), default=None)
@click.option("--input-size", type=int, default=None)
@click.option("--registry", "registry_choice", type=click.Choice([AUTO, PLANTVILLAGE]),
              default=AUTO, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="Fold summary CSV to write.")
@click.option("--figures", "figures_dir", type=click.Path(file_okay=False), default=None)
@click.option("--results", "results_path", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def cross_validate_cmd(app, manifest_path, k, preset, input_size, registry_choice,
                       output, figures_dir, results_path):
    """Stratified k-fold cross-validation of the classifier."""
    manifest = read_manifest(manifest_path)
    registry = _registry_for(manifest, registry_choice)
    labels = manifest.label_indices(registry)
    preset = _preset(app, preset, "mobile")
    size = _input_size(app, input_size)
    config = train_config_from(
        app.cfg, default_classifier_train_config(preset, shuffle_seed=app.seed))
    augment_config, factor = augment_config_from(app.cfg)
    with warnings.catch_warnings(record=True) as captured:
        warnings.simplefilter("always")
        cv = cross_validate(_load_images(manifest), labels, registry, k=k,
                            preset=preset, input_size=size, config=config,
                            augment_config=augment_config, augment_factor=factor,
                            seed=app.seed, workers=app.threads)
    _echo_warnings(captured)
    for f in cv.folds:
        click.echo(f"fold {f.fold}: accuracy {fmt(f.report.accuracy)}")
    click.echo(f"mean accuracy {fmt(cv.mean_accuracy)} "
               f"(stddev {fmt(cv.stddev_accuracy)}) in {cv.seconds:.1f}s")
    if output:
        emit_cv_summary(cv, output)
        click.echo(f"summary written to {output}")
    if figures_dir:
        from .figures import fold_accuracy_figure
        os.makedirs(figures_dir, exist_ok=True)
        path = fold_accuracy_figure(cv, os.path.join(figures_dir, "fold_accuracy.png"))
        click.echo(f"figure written to {path}")
    _write_results(results_path, {
        "kind": CV_SUMMARY,
        "folds": [{"fold": f.fold, "accuracy": f.report.accuracy,
                   "precision": f.report.precision, "recall": f.report.recall,
                   "f1": f.report.f1, "averaging": f.report.averaging}
                  for f in cv.folds],
        "mean": {"accuracy": cv.mean_accuracy, "stddev": cv.stddev_accuracy},
        "histories": [_history_dicts(f.history) for f in cv.folds],
    })


@cli.command()
@click.argument("manifest_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="Report CSV to write.")
@click.option("--figures", "figures_dir", type=click.Path(file_okay=False), default=None)
@click.option("--results", "results_path", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def evaluate(app, manifest_path, model_path, output, figures_dir, results_path):
    """Score a manifest with a stored model and report the metrics."""
    manifest = read_manifest(manifest_path)
    model = load_model(model_path)
    split = manifest.registry_name or "test"
    if figures_dir:
        os.makedirs(figures_dir, exist_ok=True)
    if isinstance(model, ClassifierModel):
        labels = manifest.label_indices(model.registry)
        x = input_batch(prepare_images(_load_images(manifest), model.input_size))
        pred, _ = predict_batch(model, x)
        matrix = confusion_matrix(pred, labels, len(model.registry))
        report = classification_report(matrix, MACRO)
        click.echo(f"accuracy {fmt(report.accuracy)} precision {fmt(report.precision)} "
                   f"recall {fmt(report.recall)} f1 {fmt(report.f1)} ({report.averaging})")
        if output:
            emit_classification_report([(split, report)], output)
            click.echo(f"report written to {output}")
        if figures_dir:
            from .figures import confusion_matrix_figure
            path = confusion_matrix_figure(
                matrix, model.registry.names,
                os.path.join(figures_dir, "confusion_matrix.png"))
            click.echo(f"figure written to {path}")
        _write_results(results_path, {
            "kind": CLASSIFICATION,
            "splits": [{"split": split, "accuracy": report.accuracy,
                        "precision": report.precision, "recall": report.recall,
                        "f1": report.f1, "averaging": report.averaging}],
            "confusion": matrix.counts.tolist(),
            "labels": list(model.registry.names),
        })
    else:
        if not manifest.has_mos:
            raise UsageError("evaluating a quality model needs a mos column")
        mos = manifest.mos_array()
        x = input_batch(prepare_images(_load_images(manifest), model.input_size))
        scores = score_tensor(model, x)
        report = regression_report(scores, mos)
        click.echo(f"rmse {fmt(report.rmse)} plcc {fmt(report.plcc)} "
                   f"srocc {fmt(report.srocc)}")
        if output:
            emit_iqa_report([(split, report)], output)
            click.echo(f"report written to {output}")
        if figures_dir:
            from .figures import quality_scatter_figure
            path = quality_scatter_figure(
                scores, mos, os.path.join(figures_dir, "quality_scatter.png"))
            click.echo(f"figure written to {path}")
        _write_results(results_path, {
            "kind": IQA,
            "datasets": [{"dataset": split, "rmse": report.rmse,
                          "plcc": report.plcc, "srocc": report.srocc}],
            "scores": scores.tolist(),
            "targets": mos.tolist(),
        })


@cli.command("calibrate-gate")
@click.argument("manifest_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--discard-fraction", "q", type=float, default=None,
              help="Fraction of images the gate should reject.")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="File to write the threshold to.")
@click.option("--figures", "figures_dir", type=click.Path(file_okay=False), default=None)
@click.pass_obj
def calibrate_gate(app, manifest_path, model_path, q, output, figures_dir):
    """Pick the gate threshold hitting a target discard fraction."""
    if q is None:
        if "gate.discard_fraction" not in app.cfg:
            raise UsageError("give --discard-fraction or set gate.discard_fraction "
                             "in the config")
        q = float(app.cfg["gate.discard_fraction"])
    manifest = read_manifest(manifest_path)
    model = load_model(model_path)
    if not isinstance(model, IqaModel):
        raise UsageError(f"{model_path} is a classifier model; calibration needs "
                         f"a quality model")
    x = input_batch(prepare_images(_load_images(manifest), model.input_size))
    scores = score_tensor(model, x)
    try:
        threshold = calibrate_threshold(scores, q)
    except ValueError as e:
        raise UsageError(str(e)) from None
    passed = int((scores >= threshold).sum())
    click.echo(f"threshold {threshold:.6f}: {len(scores) - passed} of "
               f"{len(scores)} images discarded, {passed} pass")
    if output:
        atomic_write_text(output, f"{threshold:.10g}\n")
        click.echo(f"threshold written to {output}")
    if figures_dir:
        from .figures import score_histogram_figure
        os.makedirs(figures_dir, exist_ok=True)
        path = score_histogram_figure(
            scores, threshold, os.path.join(figures_dir, "score_histogram.png"))
        click.echo(f"figure written to {path}")


@cli.command()
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("--iqa", "iqa_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--classifier", "classifier_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--threshold", type=float, default=None,
              help="Gate threshold; falls back to gate.threshold in the config.")
@click.pass_obj
def predict(app, image, iqa_path, classifier_path, threshold):
    """Run the gated workflow on one image: score, gate, diagnose."""
    if threshold is None:
        if "gate.threshold" not in app.cfg:
            raise UsageError("give --threshold or set gate.threshold in the config")
        threshold = float(app.cfg["gate.threshold"])
    iqa_model = load_model(iqa_path)
    if not isinstance(iqa_model, IqaModel):
        raise UsageError(f"--iqa file {iqa_path} holds a {KIND_CLASSIFIER} model; "
                         f"expected {KIND_IQA}")
    cls_model = load_model(classifier_path)
    if not isinstance(cls_model, ClassifierModel):
        raise UsageError(f"--classifier file {classifier_path} holds a {KIND_IQA} "
                         f"model; expected {KIND_CLASSIFIER}")
    result = run_workflow(image, iqa_model, cls_model, threshold)
    click.echo(f"quality score: {result.score:.4f} (threshold {result.threshold:.4f})")
    click.echo(f"status: {result.status}")
    if result.status != REJECTED:
        click.echo(f"class: {result.class_name}")
        order = np.argsort(result.probabilities)[::-1][:3]
        tops = ", ".join(f"{cls_model.registry.names[i]} "
                         f"{result.probabilities[i]:.4f}" for i in order)
        click.echo(f"top probabilities: {tops}")


@cli.command()
@click.argument("results_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--outdir", required=True, type=click.Path(file_okay=False),
              help="Directory for the CSV and figure files.")
def report(results_path, outdir):
    """Render a results JSON into CSV tables and PNG figures."""
    try:
        with open(results_path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read results {results_path}: {e}") from None
    kind = data.get("kind")
    os.makedirs(outdir, exist_ok=True)
    from . import figures as figs
    from .atomicio import atomic_write_text as write_text
    import csv as _csv
    import io as _io

    def write_rows(name, header, rows):
        buf = _io.StringIO()
        w = _csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        path = os.path.join(outdir, name)
        write_text(path, buf.getvalue())
        click.echo(f"wrote {path}")

    written = []
    if kind == CLASSIFICATION:
        write_rows("classification.csv", CLASSIFICATION_HEADER,
                   [(s["split"], fmt(s["accuracy"]), fmt(s["precision"]),
                     fmt(s["recall"]), fmt(s["f1"]), s["averaging"])
                    for s in data["splits"]])
        if data.get("history"):
            history = [EpochStats(**h) for h in data["history"]]
            written.append(figs.training_history_figure(
                history, os.path.join(outdir, "training_history.png")))
        if data.get("confusion"):
            from .metrics import ConfusionMatrix
            matrix = ConfusionMatrix(np.asarray(data["confusion"], dtype=np.int64))
            written.append(figs.confusion_matrix_figure(
                matrix, data.get("labels", [str(i) for i in range(matrix.k)]),
                os.path.join(outdir, "confusion_matrix.png")))
    elif kind == IQA:
        write_rows("iqa.csv", IQA_HEADER,
                   [(d["dataset"], fmt(d["rmse"]), fmt(d["plcc"]), fmt(d["srocc"]))
                    for d in data["datasets"]])
        if data.get("history"):
            history = [EpochStats(**h) for h in data["history"]]
            written.append(figs.training_history_figure(
                history, os.path.join(outdir, "training_history.png")))
        if data.get("scores") and data.get("targets"):
            written.append(figs.quality_scatter_figure(
                data["scores"], data["targets"],
                os.path.join(outdir, "quality_scatter.png")))
    elif kind == CV_SUMMARY:
        rows = [(f"fold_{f['fold']}", fmt(f["accuracy"]), fmt(f["precision"]),
                 fmt(f["recall"]), fmt(f["f1"]), f["averaging"])
                for f in data["folds"]]
        folds = data["folds"]
        n = len(folds)
        rows.append(("mean",
                     fmt(sum(f["accuracy"] for f in folds) / n),
                     fmt(sum(f["precision"] for f in folds) / n),
                     fmt(sum(f["recall"] for f in folds) / n),
                     fmt(sum(f["f1"] for f in folds) / n),
                     folds[0]["averaging"]))
        write_rows("cv_summary.csv", CV_HEADER, rows)
        accs = [f["accuracy"] for f in data["folds"]]
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.bar(range(len(accs)), accs, color="tab:blue")
        ax.axhline(sum(accs) / len(accs), color="tab:red", linestyle="--",
                   label=f"mean {sum(accs) / len(accs):.4f}")
        ax.set_xlabel("fold")
        ax.set_ylabel("accuracy")
        ax.set_ylim(0, 1.05)
        ax.legend()
        fig.tight_layout()
        path = os.path.join(outdir, "fold_accuracy.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    else:
        raise UsageError(f"results file has unknown kind {kind!r}")
    for path in written:
        click.echo(f"wrote {path}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        return 130
    except click.UsageError as e:
        message = e.format_message()
        click.echo(f"error: {message}", err=True)
        return 2
    except click.ClickException as e:
        e.show()
        return e.exit_code if e.exit_code else 1
    except LeafgateError as e:
        click.echo(f"error: {e}", err=True)
        return e.exit_code
    except OSError as e:
        click.echo(f"error: {e}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
