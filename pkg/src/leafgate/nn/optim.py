"""Adam optimizer with bias correction and the step-decay learning-rate rule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteError
from .network import Network


@dataclass(frozen=True)
class LrSchedule:
    """Step decay: ``initial_lr * decay_factor ** (epoch // decay_period_epochs)``."""

    initial_lr: float
    decay_factor: float = 0.5
    decay_period_epochs: int = 15

    def __post_init__(self):
        if self.initial_lr <= 0:
            raise ValueError("initial_lr must be positive")
        if not 0.0 < self.decay_factor <= 1.0:
            raise ValueError("decay_factor must be in (0, 1]")
        if self.decay_period_epochs < 1:
            raise ValueError("decay_period_epochs must be positive")


def lr_at_epoch(schedule: LrSchedule, epoch: int) -> float:
    """Learning rate for a 0-based epoch index; the decay repeats every period."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    return schedule.initial_lr * schedule.decay_factor ** (epoch // schedule.decay_period_epochs)


@dataclass
class AdamState:
    """First/second moment accumulators keyed by (layer index, param name)."""

    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: dict[tuple[int, str], np.ndarray] = field(default_factory=dict)
    v: dict[tuple[int, str], np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must be in [0, 1)")

    @classmethod
    def for_network(cls, network: Network, beta1: float = 0.9, beta2: float = 0.999,
                    epsilon: float = 1e-8) -> "AdamState":
        state = cls(beta1=beta1, beta2=beta2, epsilon=epsilon)
        for i, name, arr in network.trainable():
            state.m[(i, name)] = np.zeros_like(arr)
            state.v[(i, name)] = np.zeros_like(arr)
        return state


def adam_step(network: Network, grads: list[dict[str, np.ndarray]],
              state: AdamState, lr: float) -> tuple[Network, AdamState]:
    """One bias-corrected Adam update over all trainable parameters, in place."""
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for i, name, param in network.trainable():
        g = grads[i][name]
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(
                f"non-finite gradient in layer {i} ({network.layers[i].kind}) param {name!r}")
        key = (i, name)
        m = state.m[key]
        v = state.v[key]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        param -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
    return network, state
