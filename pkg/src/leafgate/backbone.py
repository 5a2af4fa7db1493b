"""Shared backbone grammar: stem and mobile inverted-bottleneck blocks.

Both the quality regressor and the disease classifier use the same block
vocabulary (expand, depthwise, squeeze-excite, project, swish activations,
batch norm everywhere) at reduced width and depth suitable for from-scratch
training on small inputs.
"""

from __future__ import annotations

from .nn import (
    Activation,
    BatchNorm,
    Conv2d,
    DepthwiseConv2d,
    LayerSpec,
    PointwiseConv2d,
    SqueezeExcite,
)

SWISH = "swish"


def stem(in_ch: int, out_ch: int) -> list[LayerSpec]:
    """3×3 stride-2 entry convolution."""
    return [Conv2d(in_ch, out_ch, kernel=3, stride=2, padding=1),
            BatchNorm(out_ch), Activation(SWISH)]


def mbconv(in_ch: int, out_ch: int, expand: int = 2, stride: int = 1,
           se_reduction: int = 4) -> list[LayerSpec]:
    """Inverted bottleneck: pointwise expand, 3×3 depthwise, squeeze-excite,
    pointwise project; batch norm after every convolution."""
    mid = in_ch * expand
    return [
        PointwiseConv2d(in_ch, mid), BatchNorm(mid), Activation(SWISH),
        DepthwiseConv2d(mid, kernel=3, stride=stride, padding=1),
        BatchNorm(mid), Activation(SWISH),
        SqueezeExcite(mid, reduction=se_reduction),
        PointwiseConv2d(mid, out_ch), BatchNorm(out_ch),
    ]
