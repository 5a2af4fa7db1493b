"""Procedural datasets for desk-scale training runs and fixtures.

Two generators:

* a 4-class leaf set whose classes differ in lesion geometry and local
  color contrast (patterns that survive intensity equalization and
  gray-world balancing, unlike a global tint);
* a blur-distortion set pairing textures with a quality score that falls
  linearly with blur strength.

Everything is seeded per item, so datasets are reproducible element-wise.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.ndimage import gaussian_filter

from .classifier import LabelRegistry
from .imaging import rgb8_from_planar, write_ppm

LEAF_CLASS_NAMES = ("healthy", "brown_spots", "yellow_blotches", "white_speckle")

BLUR_SIGMAS = (0.0, 1.0, 2.0, 3.0, 4.0)


def leaf_registry() -> LabelRegistry:
    return LabelRegistry(LEAF_CLASS_NAMES)


def _item_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, index)))


def _disk(xx, yy, cx, cy, r):
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r


def _paint(image, mask, color, alpha=1.0):
    for c in range(3):
        plane = image[c]
        plane[mask] = (1 - alpha) * plane[mask] + alpha * color[c]


def synthetic_leaf(size: int, label: int, rng: np.random.Generator) -> np.ndarray:
    """One 3×size×size leaf image for the given class.

    A multiplicative luminance ramp spreads the intensity histogram, so
    downstream histogram equalization stays close to a monotone remap
    instead of amplifying flat-region noise.
    """
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    image = np.empty((3, size, size))
    soil = np.array([0.40, 0.32, 0.24]) + rng.uniform(-0.03, 0.03, 3)
    image[:] = soil[:, None, None]

    cx, cy = size / 2 + rng.uniform(-2, 2, 2)
    rx = size * rng.uniform(0.36, 0.42)
    ry = size * rng.uniform(0.30, 0.36)
    leaf = ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0
    green = np.array([0.20, 0.52, 0.16]) + rng.uniform(-0.04, 0.04, 3)
    image[:, leaf] = green[:, None]

    inner_x = rng.uniform(cx - 0.55 * rx, cx + 0.55 * rx, 64)
    inner_y = rng.uniform(cy - 0.55 * ry, cy + 0.55 * ry, 64)
    if label == 1:  # several small dark-brown spots
        for i in range(rng.integers(7, 12)):
            r = rng.uniform(4.0, 6.0)
            _paint(image, _disk(xx, yy, inner_x[i], inner_y[i], r) & leaf,
                   (0.22, 0.10, 0.04))
    elif label == 2:  # a couple of large yellow blotches
        for i in range(rng.integers(2, 4)):
            r = rng.uniform(7.0, 11.0)
            _paint(image, _disk(xx, yy, inner_x[i], inner_y[i], r) & leaf,
                   (0.78, 0.72, 0.12), alpha=0.9)
    elif label == 3:  # many tiny near-white speckles
        for i in range(rng.integers(30, 46)):
            r = rng.uniform(1.0, 1.8)
            _paint(image, _disk(xx, yy, inner_x[i % 64], inner_y[i % 64], r) & leaf,
                   (0.92, 0.94, 0.86))

    theta = rng.uniform(0, 2 * np.pi)
    ramp = np.cos(theta) * xx + np.sin(theta) * yy
    ramp = (ramp - ramp.min()) / max(np.ptp(ramp), 1e-9)
    image *= 0.55 + 0.45 * ramp
    image += rng.normal(0.0, 0.008, image.shape)
    return np.clip(image, 0.0, 1.0)


def synthetic_leaf_dataset(n: int = 400, size: int = 64,
                           seed: int = 0) -> tuple[np.ndarray, np.ndarray, LabelRegistry]:
    """n images cycling through the 4 classes; returns (stack, labels, registry)."""
    registry = leaf_registry()
    labels = np.arange(n, dtype=np.int64) % len(registry)
    images = np.stack([synthetic_leaf(size, int(labels[i]), _item_rng(seed, i))
                       for i in range(n)])
    return images, labels, registry


def synthetic_texture(size: int, rng: np.random.Generator) -> np.ndarray:
    """A sharp colorful texture: smooth color field plus pixel-scale detail."""
    base = gaussian_filter(rng.random((3, size, size)), sigma=(0, 6, 6))
    base = (base - base.min()) / max(np.ptp(base), 1e-9)
    detail = (rng.random((1, size, size)) > 0.5).astype(np.float64)
    edges = (rng.random((1, size, size)) > 0.9).astype(np.float64)
    image = 0.55 * base + 0.30 * detail + 0.15 * edges
    return np.clip(image, 0.0, 1.0)


def synthetic_distortion_dataset(n: int = 300, size: int = 64, seed: int = 0,
                                 sigmas=BLUR_SIGMAS) -> tuple[np.ndarray, np.ndarray]:
    """n (texture, score) pairs; item i gets blur sigmas[i % len] and score
    1 - sigma/max_sigma."""
    sigmas = tuple(float(s) for s in sigmas)
    top = max(sigmas)
    images, mos = [], []
    for i in range(n):
        rng = _item_rng(seed, i)
        sigma = sigmas[i % len(sigmas)]
        image = synthetic_texture(size, rng)
        if sigma > 0:
            image = gaussian_filter(image, sigma=(0, sigma, sigma))
        images.append(np.clip(image, 0.0, 1.0))
        mos.append(1.0 - sigma / top)
    return np.stack(images), np.asarray(mos, dtype=np.float64)


def write_leaf_tree(root, n: int = 40, size: int = 64, seed: int = 0):
    """Class-per-directory PPM tree for CLI ingestion tests."""
    images, labels, registry = synthetic_leaf_dataset(n, size, seed)
    paths = []
    for i in range(n):
        sub = os.path.join(root, registry.names[int(labels[i])])
        os.makedirs(sub, exist_ok=True)
        path = os.path.join(sub, f"leaf_{i:05d}.ppm")
        write_ppm(path, rgb8_from_planar(images[i]))
        paths.append(path)
    return paths, labels, registry


def write_distortion_set(root, n: int = 50, size: int = 64, seed: int = 0):
    """Flat directory of scored PPM textures; returns (paths, scores)."""
    images, mos = synthetic_distortion_dataset(n, size, seed)
    os.makedirs(root, exist_ok=True)
    paths = []
    for i in range(n):
        path = os.path.join(root, f"texture_{i:05d}.ppm")
        write_ppm(path, rgb8_from_planar(images[i]))
        paths.append(path)
    return paths, mos
