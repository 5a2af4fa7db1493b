"""Seeded, deterministic augmentation: reflections, rotation, anisotropic
scaling, and translation, composed into one affine map per sample.

Geometry only: every output pixel is a convex combination of source pixels
(bilinear weights, edge replication), so no photometric drift is possible.
Per-item seeds derive from a master seed and the item index, making batch
results independent of processing order and worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateInputError
from .imaging import ImagePlanar, check_planar

Interval = tuple[float, float]

DEFAULT_ROTATION_DEG: Interval = (-45.0, 45.0)
DEFAULT_SCALE: Interval = (0.75, 1.25)
DEFAULT_TRANSLATE_PX: Interval = (-10.0, 10.0)
FLIP_PROBABILITY = 0.5


def _check_interval(name: str, iv: Interval) -> Interval:
    lo, hi = float(iv[0]), float(iv[1])
    if not lo <= hi:
        raise ValueError(f"{name} interval [{lo}, {hi}] is not well-ordered")
    return (lo, hi)


@dataclass(frozen=True)
class AugmentConfig:
    flip_h_enabled: bool = True
    flip_v_enabled: bool = True
    rotation_deg: Interval = DEFAULT_ROTATION_DEG
    scale: Interval = DEFAULT_SCALE
    translate_px: Interval = DEFAULT_TRANSLATE_PX

    def __post_init__(self):
        object.__setattr__(self, "rotation_deg", _check_interval("rotation_deg", self.rotation_deg))
        object.__setattr__(self, "scale", _check_interval("scale", self.scale))
        object.__setattr__(self, "translate_px", _check_interval("translate_px", self.translate_px))

    @classmethod
    def disabled(cls) -> "AugmentConfig":
        """All intervals collapsed, flips off: samples only identity params."""
        return cls(flip_h_enabled=False, flip_v_enabled=False,
                   rotation_deg=(0.0, 0.0), scale=(1.0, 1.0), translate_px=(0.0, 0.0))


@dataclass(frozen=True)
class AugmentParams:
    flip_h: bool
    flip_v: bool
    angle_deg: float
    scale_x: float
    scale_y: float
    dx_px: float
    dy_px: float

    @classmethod
    def identity(cls) -> "AugmentParams":
        return cls(False, False, 0.0, 1.0, 1.0, 0.0, 0.0)

    @property
    def is_identity(self) -> bool:
        return self == AugmentParams.identity()


def sample_params(config: AugmentConfig, seed) -> AugmentParams:
    """Draw one parameter set; fully determined by (config, seed).

    Draw order is fixed: flip_h, flip_v, angle, scale_x, scale_y, dx, dy.
    Disabled flips are forced off without consuming randomness.
    """
    rng = np.random.default_rng(seed)
    flip_h = bool(rng.random() < FLIP_PROBABILITY) if config.flip_h_enabled else False
    flip_v = bool(rng.random() < FLIP_PROBABILITY) if config.flip_v_enabled else False
    angle = float(rng.uniform(*config.rotation_deg))
    scale_x = float(rng.uniform(*config.scale))
    scale_y = float(rng.uniform(*config.scale))
    dx = float(rng.uniform(*config.translate_px))
    dy = float(rng.uniform(*config.translate_px))
    return AugmentParams(flip_h, flip_v, angle, scale_x, scale_y, dx, dy)


def affine_matrix(params: AugmentParams, width: int, height: int) -> np.ndarray:
    """Forward 3×3 map about the image center: flip, rotate, scale, translate."""
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    theta = math.radians(params.angle_deg)
    c, s = math.cos(theta), math.sin(theta)
    flip = np.diag([-1.0 if params.flip_h else 1.0, -1.0 if params.flip_v else 1.0])
    rot = np.array([[c, -s], [s, c]])
    scale = np.diag([params.scale_x, params.scale_y])
    linear = scale @ rot @ flip
    center = np.array([cx, cy])
    offset = center + np.array([params.dx_px, params.dy_px]) - linear @ center
    out = np.eye(3)
    out[:2, :2] = linear
    out[:2, 2] = offset
    return out


def _bilinear_sample(image: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Edge-clamped bilinear gather of 3×H×W planes at float coordinates."""
    _, h, w = image.shape
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx, fy = xs - x0, ys - y0
    return (image[:, y0, x0] * (1 - fy) * (1 - fx) + image[:, y0, x1] * (1 - fy) * fx
            + image[:, y1, x0] * fy * (1 - fx) + image[:, y1, x1] * fy * fx)


def apply_affine(image: ImagePlanar, params: AugmentParams) -> ImagePlanar:
    """Inverse-mapping bilinear warp by the composed affine.

    Flips are realized as exact index permutations (they map the pixel grid
    onto itself), so identity parameters and pure flips are bit-exact; the
    remaining rotation/scale/translation part interpolates.
    """
    image = check_planar(image)
    if params.scale_x == 0.0 or params.scale_y == 0.0:
        raise DegenerateInputError("zero scale factor collapses the image")
    if params.flip_h:
        image = image[:, :, ::-1]
    if params.flip_v:
        image = image[:, ::-1, :]
    rest = AugmentParams(False, False, params.angle_deg, params.scale_x,
                         params.scale_y, params.dx_px, params.dy_px)
    if rest.is_identity:
        return image.copy()
    _, h, w = image.shape
    inverse = np.linalg.inv(affine_matrix(rest, w, h))
    ys_out, xs_out = np.mgrid[0:h, 0:w]
    xs = inverse[0, 0] * xs_out + inverse[0, 1] * ys_out + inverse[0, 2]
    ys = inverse[1, 0] * xs_out + inverse[1, 1] * ys_out + inverse[1, 2]
    return _bilinear_sample(image, xs, ys)


class AugmentedSample(NamedTuple):
    source_index: int
    image: ImagePlanar
    params: AugmentParams | None  # None marks a retained original


def item_seed(master_seed: int, index: int, copy: int = 0) -> int:
    """Stable per-item seed; independent of processing order."""
    return int(np.random.SeedSequence((master_seed, index, copy)).generate_state(1)[0])


def augment_batch(images: Sequence[ImagePlanar], config: AugmentConfig,
                  master_seed: int, factor: int = 1,
                  workers: int = 1) -> list[AugmentedSample]:
    """``factor`` augmented variants per item; originals are appended after
    the augmented block whenever the set is actually expanded (factor > 1).
    """
    if not len(images):
        raise ValueError("augment_batch needs a non-empty image sequence")
    if factor < 1:
        raise ValueError("expansion factor must be >= 1")
    jobs = [(i, sample_params(config, item_seed(master_seed, i, c)))
            for i in range(len(images)) for c in range(factor)]

    def run(job):
        i, params = job
        return AugmentedSample(i, apply_affine(images[i], params), params)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(run, jobs))
    else:
        out = [run(j) for j in jobs]
    if factor > 1:
        out.extend(AugmentedSample(i, np.asarray(images[i], dtype=np.float64).copy(), None)
                   for i in range(len(images)))
    return out
