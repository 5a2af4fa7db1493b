"""Quality-gated foliar disease identification.

A numpy-only pipeline: field photos are color-normalized, screened by a
learned no-reference quality score, and the survivors are classified by a
compact depthwise-separable convolutional network.  Everything — layers,
training, metrics, serialization — is implemented here from first
principles so each stage stays inspectable and reproducible.
"""

from __future__ import annotations

from .augment import (
    AugmentConfig,
    AugmentedSample,
    AugmentParams,
    apply_affine,
    augment_batch,
    sample_params,
)
from .classifier import (
    ClassifierModel,
    CrossValidationResult,
    FoldPlan,
    LabelRegistry,
    TrainingRun,
    build_classifier,
    cross_validate,
    default_classifier_train_config,
    predict,
    predict_batch,
    stratified_holdout,
    stratified_kfold,
    train_classifier,
)
from .errors import (
    DataError,
    DegenerateInputError,
    LeafgateError,
    ModelFileError,
    ShapeError,
    TrainingError,
    UsageError,
)
from .imaging import (
    equalize_intensity,
    gray_world_balance,
    normalize_colors,
    preprocess,
    read_ppm,
    resize_bilinear,
    to_input_tensor,
    write_ppm,
)
from .manifest import SampleManifest, ingest, read_manifest, write_manifest
from .metrics import (
    classification_report,
    confusion_matrix,
    plcc,
    ranks,
    regression_report,
    rmse,
    srocc,
)
from .modelfile import load_model, save_model
from .quality import (
    GateDecision,
    IqaModel,
    build_iqa_model,
    calibrate_threshold,
    default_iqa_train_config,
    gate,
    score_quality,
    train_iqa,
)
from .workflow import WorkflowResult, run_workflow

__version__ = "0.1.0"

__all__ = [
    "AugmentConfig",
    "AugmentParams",
    "AugmentedSample",
    "ClassifierModel",
    "CrossValidationResult",
    "DataError",
    "DegenerateInputError",
    "FoldPlan",
    "GateDecision",
    "IqaModel",
    "LabelRegistry",
    "LeafgateError",
    "ModelFileError",
    "SampleManifest",
    "ShapeError",
    "TrainingError",
    "TrainingRun",
    "UsageError",
    "WorkflowResult",
    "__version__",
    "apply_affine",
    "augment_batch",
    "build_classifier",
    "build_iqa_model",
    "calibrate_threshold",
    "classification_report",
    "confusion_matrix",
    "cross_validate",
    "default_classifier_train_config",
    "default_iqa_train_config",
    "equalize_intensity",
    "gate",
    "gray_world_balance",
    "ingest",
    "load_model",
    "normalize_colors",
    "plcc",
    "predict",
    "predict_batch",
    "preprocess",
    "ranks",
    "read_manifest",
    "read_ppm",
    "regression_report",
    "resize_bilinear",
    "rmse",
    "run_workflow",
    "sample_params",
    "save_model",
    "score_quality",
    "srocc",
    "stratified_holdout",
    "stratified_kfold",
    "to_input_tensor",
    "train_classifier",
    "train_iqa",
    "write_manifest",
    "write_ppm",
]
