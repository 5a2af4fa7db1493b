"""Flat ``key = value`` configuration files.

Recognized keys (all optional; anything else is an error so typos surface):

* ``train.initial_lr``, ``train.decay_factor``, ``train.decay_period_epochs``,
  ``train.batch_size``, ``train.max_epochs``, ``train.patience``,
  ``train.patience_metric``, ``train.shuffle_seed`` -- training overrides
* ``augment.enabled``, ``augment.factor``, ``augment.flip_h``,
  ``augment.flip_v``, ``augment.rotation_min``, ``augment.rotation_max``,
  ``augment.scale_min``, ``augment.scale_max``, ``augment.translate_min``,
  ``augment.translate_max`` -- augmentation policy
* ``model.preset``, ``model.input_size`` -- architecture selection
* ``gate.threshold``, ``gate.discard_fraction`` -- quality gate
"""

from __future__ import annotations

from .augment import AugmentConfig
from .errors import UsageError
from .nn import LrSchedule, TrainConfig

KNOWN_KEYS = frozenset({
    "train.initial_lr", "train.decay_factor", "train.decay_period_epochs",
    "train.batch_size", "train.max_epochs", "train.patience",
    "train.patience_metric", "train.shuffle_seed",
    "augment.enabled", "augment.factor", "augment.flip_h", "augment.flip_v",
    "augment.rotation_min", "augment.rotation_max",
    "augment.scale_min", "augment.scale_max",
    "augment.translate_min", "augment.translate_max",
    "model.preset", "model.input_size",
    "gate.threshold", "gate.discard_fraction",
})

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def read_config(path) -> dict[str, str]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}") from None
    out: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
        key = key.strip()
        if key not in KNOWN_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        out[key] = value.strip()
    return out


def _get(cfg: dict[str, str], key: str, kind, default):
    if key not in cfg:
        return default
    raw = cfg[key]
    if kind is bool:
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise UsageError(f"config {key}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except ValueError:
        raise UsageError(f"config {key}: expected {kind.__name__}, got {raw!r}") from None


def train_config_from(cfg: dict[str, str], defaults: TrainConfig) -> TrainConfig:
    """Defaults (a recipe) overridden by any train.* keys present."""
    schedule = LrSchedule(
        _get(cfg, "train.initial_lr", float, defaults.schedule.initial_lr),
        _get(cfg, "train.decay_factor", float, defaults.schedule.decay_factor),
        _get(cfg, "train.decay_period_epochs", int, defaults.schedule.decay_period_epochs),
    )
    try:
        return TrainConfig(
            schedule=schedule,
            batch_size=_get(cfg, "train.batch_size", int, defaults.batch_size),
            max_epochs=_get(cfg, "train.max_epochs", int, defaults.max_epochs),
            patience=_get(cfg, "train.patience", int, defaults.patience),
            patience_metric=_get(cfg, "train.patience_metric", str, defaults.patience_metric),
            shuffle_seed=_get(cfg, "train.shuffle_seed", int, defaults.shuffle_seed),
        )
    except ValueError as e:
        raise UsageError(f"config: {e}") from None


def augment_config_from(cfg: dict[str, str]) -> tuple[AugmentConfig | None, int]:
    """(config, expansion factor); (None, 1) when augmentation is off."""
    if not _get(cfg, "augment.enabled", bool, False):
        return None, 1
    try:
        config = AugmentConfig(
            flip_h_enabled=_get(cfg, "augment.flip_h", bool, True),
            flip_v_enabled=_get(cfg, "augment.flip_v", bool, True),
            rotation_deg=(_get(cfg, "augment.rotation_min", float, -45.0),
                          _get(cfg, "augment.rotation_max", float, 45.0)),
            scale=(_get(cfg, "augment.scale_min", float, 0.75),
                   _get(cfg, "augment.scale_max", float, 1.25)),
            translate_px=(_get(cfg, "augment.translate_min", float, -10.0),
                          _get(cfg, "augment.translate_max", float, 10.0)),
        )
    except ValueError as e:
        raise UsageError(f"config: {e}") from None
    factor = _get(cfg, "augment.factor", int, 1)
    if factor < 1:
        raise UsageError(f"config augment.factor: must be >= 1, got {factor}")
    return config, factor
