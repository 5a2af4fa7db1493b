"""Image decoding: binary PPM natively, PNG and baseline JPEG via Pillow.

Grayscale inputs are replicated to three channels; every decoder failure
turns into a :class:`~leafgate.errors.DataError` naming the file.
"""

from __future__ import annotations

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DataError
from .imaging import ImagePlanar, ImageRgb, planar_from_rgb8, read_ppm


def decode_image(path) -> ImageRgb:
    path = str(path)
    try:
        if path.lower().endswith(".ppm"):
            return read_ppm(path)
        with Image.open(path) as img:
            rgb = img.convert("RGB")
            return np.asarray(rgb, dtype=np.uint8)
    except (OSError, UnidentifiedImageError, ValueError) as e:
        raise DataError(f"cannot decode {path}: {e}") from None


def load_planar(path) -> ImagePlanar:
    return planar_from_rgb8(decode_image(path))


def is_decodable(path) -> bool:
    try:
        decode_image(path)
        return True
    except DataError:
        return False
