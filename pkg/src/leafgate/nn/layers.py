"""Layer zoo for the feed-forward CNN engine.

Each layer is a frozen dataclass describing its configuration.  Parameters
live outside the spec (in the owning :class:`~leafgate.nn.network.Network`)
so specs stay value-like and serializable.  Every layer implements:

* ``param_entries()``   -- names/shapes of its arrays, in serialization order
* ``init_params(rng, dtype)``
* ``output_shape(in_shape)`` -- shape algebra, raises :class:`ShapeError`
* ``forward(params, x, training, rng)`` -> ``(y, cache)``
* ``backward(params, cache, grad_out)`` -> ``(grad_in, param_grads)``

All compute follows the dtype of its inputs; building parameters in float64
runs the whole engine in float64, which is what the gradient-check harness
uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import ClassVar, NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from ..errors import ShapeError

ACTIVATION_KINDS = ("swish", "relu", "sigmoid")


class ParamEntry(NamedTuple):
    name: str
    shape: tuple[int, ...]
    trainable: bool


def _he_uniform(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    limit = math.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def _windows(x: np.ndarray, kernel: int, stride: int, padding: int):
    """Padded input and its strided (N, C, Ho, Wo, k, k) window view."""
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    win = sliding_window_view(x, (kernel, kernel), axis=(2, 3))
    return x, win[:, :, ::stride, ::stride]


def _scatter_windows(gwin: np.ndarray, padded_shape, kernel: int, stride: int,
                     padding: int, in_shape) -> np.ndarray:
    """Accumulate per-window gradients (N, C, Ho, Wo, k, k) back onto the input."""
    gxp = np.zeros(padded_shape, dtype=gwin.dtype)
    ho, wo = gwin.shape[2], gwin.shape[3]
    for i in range(kernel):
        for j in range(kernel):
            gxp[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += gwin[..., i, j]
    if padding:
        h, w = in_shape[2], in_shape[3]
        return gxp[:, :, padding:padding + h, padding:padding + w]
    return gxp


def _require_4d(spec, in_shape, channels: int) -> tuple[int, int, int, int]:
    if len(in_shape) != 4:
        raise ShapeError(f"{spec.kind} expects a 4-d N×C×H×W input, got shape {tuple(in_shape)}")
    if in_shape[1] != channels:
        raise ShapeError(f"{spec.kind} expects {channels} input channels, got {in_shape[1]}")
    return tuple(in_shape)


@dataclass(frozen=True)
class Conv2d:
    kind: ClassVar[str] = "conv2d"
    in_ch: int
    out_ch: int
    kernel: int
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        if min(self.in_ch, self.out_ch, self.kernel, self.stride) < 1 or self.padding < 0:
            raise ValueError(f"invalid conv2d configuration {self}")

    def param_entries(self):
        return [ParamEntry("weight", (self.out_ch, self.in_ch, self.kernel, self.kernel), True),
                ParamEntry("bias", (self.out_ch,), True)]

    def init_params(self, rng, dtype):
        fan_in = self.in_ch * self.kernel * self.kernel
        return {"weight": _he_uniform(rng, (self.out_ch, self.in_ch, self.kernel, self.kernel), fan_in, dtype),
                "bias": np.zeros(self.out_ch, dtype=dtype)}

    def output_shape(self, in_shape):
        n, _, h, w = _require_4d(self, in_shape, self.in_ch)
        ho = (h + 2 * self.padding - self.kernel) // self.stride + 1
        wo = (w + 2 * self.padding - self.kernel) // self.stride + 1
        if ho < 1 or wo < 1:
            raise ShapeError(f"{self.kind}: kernel {self.kernel} does not fit input {h}×{w} "
                             f"with padding {self.padding}")
        return (n, self.out_ch, ho, wo)

    def forward(self, params, x, training=False, rng=None):
        n, _, ho, wo = self.output_shape(x.shape)
        xp, win = _windows(x, self.kernel, self.stride, self.padding)
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n, ho * wo, -1)
        wmat = params["weight"].reshape(self.out_ch, -1)
        y = cols @ wmat.T + params["bias"]
        y = y.transpose(0, 2, 1).reshape(n, self.out_ch, ho, wo)
        return y, (cols, xp.shape, x.shape, ho, wo)

    def backward(self, params, cache, grad_out):
        cols, padded_shape, in_shape, ho, wo = cache
        n = grad_out.shape[0]
        wmat = params["weight"].reshape(self.out_ch, -1)
        g2 = grad_out.reshape(n, self.out_ch, ho * wo).transpose(0, 2, 1)
        gw = np.tensordot(g2, cols, axes=([0, 1], [0, 1])).reshape(params["weight"].shape)
        gb = grad_out.sum(axis=(0, 2, 3))
        gcols = g2 @ wmat
        gwin = gcols.reshape(n, ho, wo, self.in_ch, self.kernel, self.kernel).transpose(0, 3, 1, 2, 4, 5)
        gx = _scatter_windows(gwin, padded_shape, self.kernel, self.stride, self.padding, in_shape)
        return gx, {"weight": gw, "bias": gb}


@dataclass(frozen=True)
class DepthwiseConv2d:
    kind: ClassVar[str] = "depthwise_conv2d"
    ch: int
    kernel: int
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        if min(self.ch, self.kernel, self.stride) < 1 or self.padding < 0:
            raise ValueError(f"invalid depthwise configuration {self}")

    def param_entries(self):
        return [ParamEntry("weight", (self.ch, self.kernel, self.kernel), True),
                ParamEntry("bias", (self.ch,), True)]

    def init_params(self, rng, dtype):
        fan_in = self.kernel * self.kernel
        return {"weight": _he_uniform(rng, (self.ch, self.kernel, self.kernel), fan_in, dtype),
                "bias": np.zeros(self.ch, dtype=dtype)}

    def output_shape(self, in_shape):
        n, _, h, w = _require_4d(self, in_shape, self.ch)
        ho = (h + 2 * self.padding - self.kernel) // self.stride + 1
        wo = (w + 2 * self.padding - self.kernel) // self.stride + 1
        if ho < 1 or wo < 1:
            raise ShapeError(f"{self.kind}: kernel {self.kernel} does not fit input {h}×{w} "
                             f"with padding {self.padding}")
        return (n, self.ch, ho, wo)

    def forward(self, params, x, training=False, rng=None):
        self.output_shape(x.shape)
        xp, win = _windows(x, self.kernel, self.stride, self.padding)
        y = np.einsum("nchwij,cij->nchw", win, params["weight"])
        y += params["bias"][:, None, None]
        return y, (win, xp.shape, x.shape)

    def backward(self, params, cache, grad_out):
        win, padded_shape, in_shape = cache
        gw = np.einsum("nchw,nchwij->cij", grad_out, win)
        gb = grad_out.sum(axis=(0, 2, 3))
        gwin = grad_out[..., None, None] * params["weight"][None, :, None, None, :, :]
        gx = _scatter_windows(gwin, padded_shape, self.kernel, self.stride, self.padding, in_shape)
        return gx, {"weight": gw, "bias": gb}


@dataclass(frozen=True)
class PointwiseConv2d:
    kind: ClassVar[str] = "pointwise_conv2d"
    in_ch: int
    out_ch: int

    def __post_init__(self):
        if min(self.in_ch, self.out_ch) < 1:
            raise ValueError(f"invalid pointwise configuration {self}")

    def param_entries(self):
        return [ParamEntry("weight", (self.out_ch, self.in_ch), True),
                ParamEntry("bias", (self.out_ch,), True)]

    def init_params(self, rng, dtype):
        return {"weight": _he_uniform(rng, (self.out_ch, self.in_ch), self.in_ch, dtype),
                "bias": np.zeros(self.out_ch, dtype=dtype)}

    def output_shape(self, in_shape):
        n, _, h, w = _require_4d(self, in_shape, self.in_ch)
        return (n, self.out_ch, h, w)

    def forward(self, params, x, training=False, rng=None):
        self.output_shape(x.shape)
        y = np.tensordot(x, params["weight"], axes=([1], [1])).transpose(0, 3, 1, 2)
        y += params["bias"][:, None, None]
        return y, (x,)

    def backward(self, params, cache, grad_out):
        (x,) = cache
        gw = np.tensordot(grad_out, x, axes=([0, 2, 3], [0, 2, 3]))
        gb = grad_out.sum(axis=(0, 2, 3))
        gx = np.tensordot(grad_out, params["weight"], axes=([1], [0])).transpose(0, 3, 1, 2)
        return gx, {"weight": gw, "bias": gb}


@dataclass(frozen=True)
class BatchNorm:
    kind: ClassVar[str] = "batch_norm"
    ch: int
    epsilon: float = 1e-5
    momentum: float = 0.9

    def __post_init__(self):
        if self.ch < 1 or self.epsilon <= 0 or not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"invalid batch norm configuration {self}")

    def param_entries(self):
        return [ParamEntry("gamma", (self.ch,), True),
                ParamEntry("beta", (self.ch,), True),
                ParamEntry("running_mean", (self.ch,), False),
                ParamEntry("running_var", (self.ch,), False)]

    def init_params(self, rng, dtype):
        return {"gamma": np.ones(self.ch, dtype=dtype),
                "beta": np.zeros(self.ch, dtype=dtype),
                "running_mean": np.zeros(self.ch, dtype=dtype),
                "running_var": np.ones(self.ch, dtype=dtype)}

    def output_shape(self, in_shape):
        if len(in_shape) not in (2, 4):
            raise ShapeError(f"{self.kind} expects a 2-d or 4-d input, got shape {tuple(in_shape)}")
        if in_shape[1] != self.ch:
            raise ShapeError(f"{self.kind} expects {self.ch} channels, got {in_shape[1]}")
        return tuple(in_shape)

    def _bshape(self, ndim):
        return (1, self.ch, 1, 1) if ndim == 4 else (1, self.ch)

    def forward(self, params, x, training=False, rng=None):
        self.output_shape(x.shape)
        axes = (0, 2, 3) if x.ndim == 4 else (0,)
        bshape = self._bshape(x.ndim)
        if training:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            # running statistics keep `momentum` of their previous value
            m = self.momentum
            params["running_mean"] = (m * params["running_mean"] + (1 - m) * mean).astype(x.dtype)
            params["running_var"] = (m * params["running_var"] + (1 - m) * var).astype(x.dtype)
        else:
            mean = params["running_mean"]
            var = params["running_var"]
        inv = 1.0 / np.sqrt(var + self.epsilon)
        xhat = (x - mean.reshape(bshape)) * inv.reshape(bshape)
        y = params["gamma"].reshape(bshape) * xhat + params["beta"].reshape(bshape)
        count = x.size // self.ch
        return y, (xhat, inv, count, training)

    def backward(self, params, cache, grad_out):
        xhat, inv, count, training = cache
        axes = (0, 2, 3) if grad_out.ndim == 4 else (0,)
        bshape = self._bshape(grad_out.ndim)
        gamma = params["gamma"].reshape(bshape)
        ggamma = (grad_out * xhat).sum(axis=axes)
        gbeta = grad_out.sum(axis=axes)
        gxhat = grad_out * gamma
        if training:
            # gradient through the batch mean/variance
            gx = (inv.reshape(bshape) / count) * (
                count * gxhat
                - gxhat.sum(axis=axes).reshape(bshape)
                - xhat * (gxhat * xhat).sum(axis=axes).reshape(bshape))
        else:
            gx = gxhat * inv.reshape(bshape)
        return gx, {"gamma": ggamma, "beta": gbeta}


@dataclass(frozen=True)
class Activation:
    kind: ClassVar[str] = "activation"
    fn: str = "swish"

    def __post_init__(self):
        if self.fn not in ACTIVATION_KINDS:
            raise ValueError(f"unknown activation {self.fn!r}")

    def param_entries(self):
        return []

    def init_params(self, rng, dtype):
        return {}

    def output_shape(self, in_shape):
        return tuple(in_shape)

    def forward(self, params, x, training=False, rng=None):
        if self.fn == "relu":
            return np.maximum(x, 0), (x,)
        s = expit(x)
        if self.fn == "sigmoid":
            return s, (s,)
        return x * s, (x, s)

    def backward(self, params, cache, grad_out):
        if self.fn == "relu":
            (x,) = cache
            return grad_out * (x > 0), {}
        if self.fn == "sigmoid":
            (s,) = cache
            return grad_out * s * (1 - s), {}
        x, s = cache
        return grad_out * (s * (1 + x * (1 - s))), {}


@dataclass(frozen=True)
class SqueezeExcite:
    """Channel attention: pooled statistics gate each channel (swish squeeze)."""

    kind: ClassVar[str] = "squeeze_excite"
    ch: int
    reduction: int = 4

    def __post_init__(self):
        if self.ch < 1 or self.reduction < 1:
            raise ValueError(f"invalid squeeze-excite configuration {self}")

    @property
    def mid(self) -> int:
        return max(1, self.ch // self.reduction)

    def param_entries(self):
        return [ParamEntry("w_squeeze", (self.ch, self.mid), True),
                ParamEntry("b_squeeze", (self.mid,), True),
                ParamEntry("w_excite", (self.mid, self.ch), True),
                ParamEntry("b_excite", (self.ch,), True)]

    def init_params(self, rng, dtype):
        return {"w_squeeze": _he_uniform(rng, (self.ch, self.mid), self.ch, dtype),
                "b_squeeze": np.zeros(self.mid, dtype=dtype),
                "w_excite": _he_uniform(rng, (self.mid, self.ch), self.mid, dtype),
                "b_excite": np.zeros(self.ch, dtype=dtype)}

    def output_shape(self, in_shape):
        return _require_4d(self, in_shape, self.ch)

    def forward(self, params, x, training=False, rng=None):
        self.output_shape(x.shape)
        s = x.mean(axis=(2, 3))
        h_pre = s @ params["w_squeeze"] + params["b_squeeze"]
        hs = expit(h_pre)
        h = h_pre * hs
        g = expit(h @ params["w_excite"] + params["b_excite"])
        y = x * g[:, :, None, None]
        return y, (x, s, h_pre, hs, h, g)

    def backward(self, params, cache, grad_out):
        x, s, h_pre, hs, h, g = cache
        area = x.shape[2] * x.shape[3]
        gx = grad_out * g[:, :, None, None]
        gg = (grad_out * x).sum(axis=(2, 3))
        gg_pre = gg * g * (1 - g)
        gw_e = h.T @ gg_pre
        gb_e = gg_pre.sum(axis=0)
        gh = gg_pre @ params["w_excite"].T
        gh_pre = gh * (hs * (1 + h_pre * (1 - hs)))
        gw_s = s.T @ gh_pre
        gb_s = gh_pre.sum(axis=0)
        gs = gh_pre @ params["w_squeeze"].T
        gx += gs[:, :, None, None] / area
        return gx, {"w_squeeze": gw_s, "b_squeeze": gb_s, "w_excite": gw_e, "b_excite": gb_e}


@dataclass(frozen=True)
class GlobalMaxPool:
    kind: ClassVar[str] = "global_max_pool"

    def param_entries(self):
        return []

    def init_params(self, rng, dtype):
        return {}

    def output_shape(self, in_shape):
        if len(in_shape) != 4:
            raise ShapeError(f"{self.kind} expects a 4-d input, got shape {tuple(in_shape)}")
        return (in_shape[0], in_shape[1])

    def forward(self, params, x, training=False, rng=None):
        flat = x.reshape(x.shape[0], x.shape[1], -1)
        idx = flat.argmax(axis=2)  # first maximum on ties, deterministic
        y = np.take_along_axis(flat, idx[..., None], axis=2)[..., 0]
        return y, (idx, x.shape)

    def backward(self, params, cache, grad_out):
        idx, in_shape = cache
        gflat = np.zeros((in_shape[0], in_shape[1], in_shape[2] * in_shape[3]),
                         dtype=grad_out.dtype)
        np.put_along_axis(gflat, idx[..., None], grad_out[..., None], axis=2)
        return gflat.reshape(in_shape), {}


@dataclass(frozen=True)
class GlobalAvgPool:
    kind: ClassVar[str] = "global_avg_pool"

    def param_entries(self):
        return []

    def init_params(self, rng, dtype):
        return {}

    def output_shape(self, in_shape):
        if len(in_shape) != 4:
            raise ShapeError(f"{self.kind} expects a 4-d input, got shape {tuple(in_shape)}")
        return (in_shape[0], in_shape[1])

    def forward(self, params, x, training=False, rng=None):
        return x.mean(axis=(2, 3)), (x.shape,)

    def backward(self, params, cache, grad_out):
        (in_shape,) = cache
        area = in_shape[2] * in_shape[3]
        gx = np.broadcast_to(grad_out[:, :, None, None] / area, in_shape)
        return np.ascontiguousarray(gx), {}


@dataclass(frozen=True)
class Dense:
    kind: ClassVar[str] = "dense"
    in_dim: int
    out_dim: int

    def __post_init__(self):
        if min(self.in_dim, self.out_dim) < 1:
            raise ValueError(f"invalid dense configuration {self}")

    def param_entries(self):
        return [ParamEntry("weight", (self.in_dim, self.out_dim), True),
                ParamEntry("bias", (self.out_dim,), True)]

    def init_params(self, rng, dtype):
        return {"weight": _he_uniform(rng, (self.in_dim, self.out_dim), self.in_dim, dtype),
                "bias": np.zeros(self.out_dim, dtype=dtype)}

    def output_shape(self, in_shape):
        if len(in_shape) != 2:
            raise ShapeError(f"{self.kind} expects a 2-d N×D input, got shape {tuple(in_shape)}")
        if in_shape[1] != self.in_dim:
            raise ShapeError(f"{self.kind} expects {self.in_dim} input features, got {in_shape[1]}")
        return (in_shape[0], self.out_dim)

    def forward(self, params, x, training=False, rng=None):
        self.output_shape(x.shape)
        return x @ params["weight"] + params["bias"], (x,)

    def backward(self, params, cache, grad_out):
        (x,) = cache
        gw = x.T @ grad_out
        gb = grad_out.sum(axis=0)
        gx = grad_out @ params["weight"].T
        return gx, {"weight": gw, "bias": gb}


@dataclass(frozen=True)
class Dropout:
    kind: ClassVar[str] = "dropout"
    p: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"dropout probability must be in [0, 1), got {self.p}")

    def param_entries(self):
        return []

    def init_params(self, rng, dtype):
        return {}

    def output_shape(self, in_shape):
        return tuple(in_shape)

    def forward(self, params, x, training=False, rng=None):
        if not training or self.p == 0.0:
            return x, (None,)
        if rng is None:
            raise ValueError("dropout in training mode needs the network rng")
        # inverted dropout: kept units are rescaled so inference is identity
        mask = (rng.random(x.shape) >= self.p).astype(x.dtype) / (1.0 - self.p)
        return x * mask, (mask,)

    def backward(self, params, cache, grad_out):
        (mask,) = cache
        if mask is None:
            return grad_out, {}
        return grad_out * mask, {}


@dataclass(frozen=True)
class Softmax:
    kind: ClassVar[str] = "softmax"

    def param_entries(self):
        return []

    def init_params(self, rng, dtype):
        return {}

    def output_shape(self, in_shape):
        if len(in_shape) != 2:
            raise ShapeError(f"{self.kind} expects a 2-d N×K input, got shape {tuple(in_shape)}")
        return tuple(in_shape)

    def forward(self, params, x, training=False, rng=None):
        self.output_shape(x.shape)
        z = x - x.max(axis=1, keepdims=True)
        e = np.exp(z)
        y = e / e.sum(axis=1, keepdims=True)
        return y, (y,)

    def backward(self, params, cache, grad_out):
        (y,) = cache
        gx = y * (grad_out - (grad_out * y).sum(axis=1, keepdims=True))
        return gx, {}


LAYER_KINDS = {cls.kind: cls for cls in
               (Conv2d, DepthwiseConv2d, PointwiseConv2d, BatchNorm, Activation,
                SqueezeExcite, GlobalMaxPool, GlobalAvgPool, Dense, Dropout, Softmax)}

LayerSpec = (Conv2d | DepthwiseConv2d | PointwiseConv2d | BatchNorm | Activation
             | SqueezeExcite | GlobalMaxPool | GlobalAvgPool | Dense | Dropout | Softmax)


def spec_to_dict(spec) -> dict:
    d = {"kind": spec.kind}
    for f in fields(spec):
        d[f.name] = getattr(spec, f.name)
    return d


def spec_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("kind")
    if kind not in LAYER_KINDS:
        raise ValueError(f"unknown layer kind {kind!r}")
    return LAYER_KINDS[kind](**d)
