"""Raster model and preprocessing: intensity equalization, color-cast
removal, bilinear resizing, and network input conversion.

Two array conventions:

* ``ImageRgb`` -- H×W×3 uint8, the ingestion unit.
* ``ImagePlanar`` -- 3×H×W float64 planes in [0, 1]; every operation here
  consumes and produces this form, clamped back into range.

float64 planes keep the sub-1e-6 mean and ratio guarantees honest; exported
tensors drop to float32 only at :func:`to_input_tensor`.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError, DegenerateInputError, ShapeError

EPSILON = 1e-6
INTENSITY_LEVELS = 256

ImageRgb = np.ndarray  # H×W×3 uint8
ImagePlanar = np.ndarray  # 3×H×W float64 in [0, 1]


def check_planar(image: np.ndarray) -> ImagePlanar:
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[0] != 3:
        raise ShapeError(f"expected 3×H×W planes, got shape {image.shape}")
    if image.shape[1] < 1 or image.shape[2] < 1:
        raise ShapeError(f"zero-area image {image.shape}")
    return image.astype(np.float64, copy=False)


def planar_from_rgb8(rgb: ImageRgb) -> ImagePlanar:
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ShapeError(f"expected H×W×3 pixels, got shape {rgb.shape}")
    return rgb.astype(np.float64).transpose(2, 0, 1) / 255.0


def rgb8_from_planar(image: ImagePlanar) -> ImageRgb:
    image = check_planar(image)
    return np.clip(np.rint(image * 255.0), 0, 255).astype(np.uint8).transpose(1, 2, 0)


def equalize_intensity(image: ImagePlanar) -> ImagePlanar:
    """Histogram-equalize the intensity layer, preserving channel ratios.

    Intensity is the channel mean, quantized to 256 levels.  The standard
    CDF remap sends level v to (cdf(v) - cdf_min) / (N - cdf_min) * 255;
    each pixel's RGB is then scaled by the intensity ratio so hue is kept.
    A single-level image has a degenerate CDF and is returned unchanged.
    """
    image = check_planar(image)
    levels = np.rint(image.mean(axis=0) * (INTENSITY_LEVELS - 1)).astype(np.int64)
    hist = np.bincount(levels.reshape(-1), minlength=INTENSITY_LEVELS)
    cdf = np.cumsum(hist)
    n = int(cdf[-1])
    cdf_min = int(cdf[np.nonzero(hist)[0][0]])
    if n == cdf_min:  # one distinct level: remap undefined, leave as-is
        return image.copy()
    lut = (cdf - cdf_min) / (n - cdf_min) * 255.0
    old_intensity = levels / 255.0
    new_intensity = lut[levels] / 255.0
    scale = (new_intensity + EPSILON) / (old_intensity + EPSILON)
    return np.clip(image * scale, 0.0, 1.0)


def gray_world_scales(image: ImagePlanar) -> np.ndarray:
    """Per-channel gains that equalize channel means (gray-world assumption)."""
    image = check_planar(image)
    means = image.mean(axis=(1, 2))
    if np.any(means == 0.0):
        ch = "RGB"[int(np.argmin(means))]
        raise DegenerateInputError(f"channel {ch} has zero mean; cannot balance")
    return means.mean() / means


def gray_world_balance(image: ImagePlanar) -> ImagePlanar:
    scales = gray_world_scales(image)
    return np.clip(image * scales[:, None, None], 0.0, 1.0)


def _axis_coords(src: int, dst: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Edge-clamped half-pixel-center sampling grid for one axis."""
    pos = np.clip((np.arange(dst) + 0.5) * (src / dst) - 0.5, 0.0, src - 1.0)
    lo = np.floor(pos).astype(np.int64)
    hi = np.minimum(lo + 1, src - 1)
    return lo, hi, pos - lo


def resize_bilinear(image: ImagePlanar, target_w: int, target_h: int) -> ImagePlanar:
    image = check_planar(image)
    if target_w < 1 or target_h < 1:
        raise ValueError(f"target size {target_w}×{target_h} must be at least 1×1")
    _, h, w = image.shape
    if (target_w, target_h) == (w, h):
        return image.copy()
    y0, y1, fy = _axis_coords(h, target_h)
    x0, x1, fx = _axis_coords(w, target_w)
    fy = fy[:, None]
    top = image[:, y0][:, :, x0] * (1 - fx) + image[:, y0][:, :, x1] * fx
    bottom = image[:, y1][:, :, x0] * (1 - fx) + image[:, y1][:, :, x1] * fx
    return top * (1 - fy) + bottom * fy


def to_input_tensor(image: ImagePlanar) -> np.ndarray:
    """1×3×H×W float32 tensor, zero-centered with mean 0.5 and scale 2."""
    image = check_planar(image)
    return ((image - 0.5) * 2.0).astype(np.float32)[None]


def normalize_colors(image: ImagePlanar) -> ImagePlanar:
    """The resolution-independent part of preprocessing: equalize, balance."""
    return gray_world_balance(equalize_intensity(image))


def preprocess(image: ImagePlanar, input_size: int) -> ImagePlanar:
    """The full pipeline order: equalize, balance, resize to the model size."""
    return resize_bilinear(normalize_colors(image), input_size, input_size)


def read_ppm(path) -> ImageRgb:
    """Binary PPM (P6, maxval 255) reader for bit-exact fixtures."""
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P6"):
        raise DataError(f"{path}: not a binary PPM (P6) file")
    tokens: list[int] = []
    i = 2
    while len(tokens) < 3:
        if i >= len(data):
            raise DataError(f"{path}: truncated PPM header")
        c = data[i:i + 1]
        if c == b"#":
            i = data.find(b"\n", i)
            if i < 0:
                raise DataError(f"{path}: truncated PPM comment")
            i += 1
        elif c.isspace():
            i += 1
        elif c.isdigit():
            j = i
            while j < len(data) and data[j:j + 1].isdigit():
                j += 1
            tokens.append(int(data[i:j]))
            i = j
        else:
            raise DataError(f"{path}: malformed PPM header byte {c!r}")
    width, height, maxval = tokens
    if maxval != 255:
        raise DataError(f"{path}: unsupported PPM maxval {maxval}")
    i += 1  # the single whitespace byte after maxval
    pixels = np.frombuffer(data, dtype=np.uint8, offset=i)
    if pixels.size < width * height * 3:
        raise DataError(f"{path}: PPM pixel data truncated")
    return pixels[:width * height * 3].reshape(height, width, 3).copy()


def write_ppm(path, rgb: ImageRgb) -> None:
    rgb = np.ascontiguousarray(np.asarray(rgb, dtype=np.uint8))
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ShapeError(f"expected H×W×3 pixels, got shape {rgb.shape}")
    h, w, _ = rgb.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(rgb.tobytes())
