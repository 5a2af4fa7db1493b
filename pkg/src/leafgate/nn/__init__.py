"""From-scratch feed-forward CNN engine on numpy arrays."""

from .fit import (
    CROSS_ENTROPY,
    MSE,
    VALIDATION_ACCURACY,
    VALIDATION_LOSS,
    ArrayDataset,
    EpochStats,
    PatienceTracker,
    TrainConfig,
    evaluate,
    fit,
)
from .gradcheck import GradCheckResult, check_layer_gradients, check_network_gradients
from .layers import (
    ACTIVATION_KINDS,
    LAYER_KINDS,
    Activation,
    BatchNorm,
    Conv2d,
    Dense,
    DepthwiseConv2d,
    Dropout,
    GlobalAvgPool,
    GlobalMaxPool,
    LayerSpec,
    ParamEntry,
    PointwiseConv2d,
    Softmax,
    SqueezeExcite,
    spec_from_dict,
    spec_to_dict,
)
from .losses import cross_entropy_loss, mse_loss
from .network import INFERENCE, TRAINING, Network
from .optim import AdamState, LrSchedule, adam_step, lr_at_epoch

__all__ = [
    "ACTIVATION_KINDS",
    "Activation",
    "AdamState",
    "ArrayDataset",
    "BatchNorm",
    "CROSS_ENTROPY",
    "Conv2d",
    "Dense",
    "DepthwiseConv2d",
    "Dropout",
    "EpochStats",
    "GlobalAvgPool",
    "GlobalMaxPool",
    "GradCheckResult",
    "INFERENCE",
    "LAYER_KINDS",
    "LayerSpec",
    "LrSchedule",
    "MSE",
    "Network",
    "ParamEntry",
    "PatienceTracker",
    "PointwiseConv2d",
    "Softmax",
    "SqueezeExcite",
    "TRAINING",
    "TrainConfig",
    "VALIDATION_ACCURACY",
    "VALIDATION_LOSS",
    "adam_step",
    "check_layer_gradients",
    "check_network_gradients",
    "cross_entropy_loss",
    "evaluate",
    "fit",
    "lr_at_epoch",
    "mse_loss",
    "spec_from_dict",
    "spec_to_dict",
]
