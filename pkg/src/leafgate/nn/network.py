"""Sequential network container: ordered layer specs plus their parameters."""

from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np

from ..errors import ShapeError
from .layers import LayerSpec

TRAINING = "training"
INFERENCE = "inference"


class Network:
    """An ordered layer sequence with per-layer parameter dicts.

    ``mode`` controls BatchNorm statistics and Dropout; inference mode is
    deterministic.  Instances are cheap to copy and safe to move between
    threads; the training loop owns its network exclusively.
    """

    def __init__(self, layers: Sequence[LayerSpec], params: list[dict[str, np.ndarray]],
                 mode: str = TRAINING):
        if len(layers) != len(params):
            raise ValueError("one parameter dict per layer required")
        self.layers = tuple(layers)
        self.params = params
        self.mode = mode

    @classmethod
    def initialized(cls, layers: Sequence[LayerSpec], seed: int = 0,
                    dtype=np.float32) -> "Network":
        rng = np.random.default_rng(seed)
        params = [spec.init_params(rng, dtype) for spec in layers]
        return cls(layers, params)

    @property
    def dtype(self):
        for p in self.params:
            for arr in p.values():
                return arr.dtype
        return np.dtype(np.float32)

    def train(self) -> "Network":
        self.mode = TRAINING
        return self

    def eval(self) -> "Network":
        self.mode = INFERENCE
        return self

    def copy(self) -> "Network":
        params = [{k: v.copy() for k, v in p.items()} for p in self.params]
        return Network(self.layers, params, self.mode)

    def output_shape(self, in_shape) -> tuple[int, ...]:
        shape = tuple(in_shape)
        for i, spec in enumerate(self.layers):
            try:
                shape = spec.output_shape(shape)
            except ShapeError as e:
                raise ShapeError(f"layer {i} ({spec.kind}): {e}") from None
        return shape

    def forward(self, x: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
        training = self.mode == TRAINING
        for i, spec in enumerate(self.layers):
            try:
                x, _ = spec.forward(self.params[i], x, training, rng)
            except ShapeError as e:
                raise ShapeError(f"layer {i} ({spec.kind}): {e}") from None
        return x

    def forward_cached(self, x: np.ndarray,
                       rng: np.random.Generator | None = None):
        """Forward pass keeping per-layer caches for :meth:`backward`."""
        training = self.mode == TRAINING
        caches = []
        for i, spec in enumerate(self.layers):
            try:
                x, cache = spec.forward(self.params[i], x, training, rng)
            except ShapeError as e:
                raise ShapeError(f"layer {i} ({spec.kind}): {e}") from None
            caches.append(cache)
        return x, caches

    def backward(self, caches, grad_out: np.ndarray):
        """Returns (per-layer gradient dicts, gradient w.r.t. the input batch)."""
        if len(caches) != len(self.layers):
            raise ValueError(f"activation cache of length {len(caches)} does not match "
                             f"{len(self.layers)} layers; run forward_cached first")
        grads: list[dict[str, np.ndarray]] = [None] * len(self.layers)
        g = grad_out
        for i in range(len(self.layers) - 1, -1, -1):
            g, grads[i] = self.layers[i].backward(self.params[i], caches[i], g)
        return grads, g

    def trainable(self) -> Iterator[tuple[int, str, np.ndarray]]:
        for i, spec in enumerate(self.layers):
            for entry in spec.param_entries():
                if entry.trainable:
                    yield i, entry.name, self.params[i][entry.name]

    def param_count(self) -> int:
        return sum(arr.size for _, _, arr in self.trainable())

    def layer_table(self) -> list[dict]:
        """Per-layer summary: kind, parameter shapes and trainable counts."""
        rows = []
        for i, spec in enumerate(self.layers):
            entries = spec.param_entries()
            rows.append({
                "index": i,
                "kind": spec.kind,
                "params": {e.name: tuple(e.shape) for e in entries},
                "trainable": sum(int(np.prod(e.shape)) for e in entries if e.trainable),
            })
        return rows
