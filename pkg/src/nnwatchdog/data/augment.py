"""Training-time image augmentation: rotate, crop-resize, flip, grayscale.

Operations run in the listed order, each drawing its parameters from the
supplied stream.  Geometry is resampled bilinearly with zero padding, and
results keep the input dimensions with values clipped to [0, 1].  Two
identities hold pixel-for-pixel: flipping twice restores the original, and
a zero-degree rotation (or full-frame crop) is a no-op.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..rng import Rng
from .dataset import DataError


@dataclass(frozen=True)
class AugmentationSpec:
    rotate_degrees: float = 8.0
    crop_min_fraction: float = 0.88
    flip_probability: float = 0.5
    grayscale_probability: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.crop_min_fraction <= 1.0):
            raise DataError("crop fraction must be in (0, 1]")
        for p in (self.flip_probability, self.grayscale_probability):
            if not (0.0 <= p <= 1.0):
                raise DataError("probabilities must be in [0, 1]")


IDENTITY_AUGMENTATION = AugmentationSpec(
    rotate_degrees=0.0, crop_min_fraction=1.0, flip_probability=0.0,
    grayscale_probability=0.0,
)


def _bilinear_sample(img: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Sample (h, w, c) at float coordinates, zero outside the frame."""
    h, w = img.shape[:2]
    y0 = np.floor(ys)
    x0 = np.floor(xs)
    fy = (ys - y0)[..., None]
    fx = (xs - x0)[..., None]
    y0 = y0.astype(np.int64)
    x0 = x0.astype(np.int64)

    def at(yi, xi):
        inside = (yi >= 0) & (yi < h) & (xi >= 0) & (xi < w)
        vals = img[np.clip(yi, 0, h - 1), np.clip(xi, 0, w - 1)]
        return vals * inside[..., None]

    return (
        at(y0, x0) * (1.0 - fy) * (1.0 - fx)
        + at(y0, x0 + 1) * (1.0 - fy) * fx
        + at(y0 + 1, x0) * fy * (1.0 - fx)
        + at(y0 + 1, x0 + 1) * fy * fx
    )


def rotate(img: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate about the image center; bilinear, zero padded."""
    h, w = img.shape[:2]
    t = math.radians(degrees)
    ct, st = math.cos(t), math.sin(t)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = np.meshgrid(np.arange(h) - cy, np.arange(w) - cx, indexing="ij")
    src_y = yy * ct - xx * st + cy
    src_x = yy * st + xx * ct + cx
    return _bilinear_sample(img, src_y, src_x)


def resize(img: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize with corner-aligned sampling."""
    h, w = img.shape[:2]
    ys = (
        np.arange(height) * ((h - 1) / (height - 1)) if height > 1 else np.zeros(1)
    )
    xs = np.arange(width) * ((w - 1) / (width - 1)) if width > 1 else np.zeros(1)
    gy, gx = np.meshgrid(ys, xs, indexing="ij")
    return _bilinear_sample(img, gy, gx)


def crop_resize(img: np.ndarray, fraction: float, oy: int, ox: int) -> np.ndarray:
    """Crop a `fraction`-sized window at offset (oy, ox), resize back."""
    h, w = img.shape[:2]
    ch = max(1, round(fraction * h))
    cw = max(1, round(fraction * w))
    crop = img[oy : oy + ch, ox : ox + cw]
    if (ch, cw) == (h, w):
        return crop.copy()
    return resize(crop, h, w)


def horizontal_flip(img: np.ndarray) -> np.ndarray:
    return img[:, ::-1].copy()


def grayscale(img: np.ndarray) -> np.ndarray:
    """Luma conversion, replicated to keep the channel count."""
    if img.shape[2] == 1:
        return img.copy()
    luma = 0.299 * img[:, :, 0] + 0.587 * img[:, :, 1] + 0.114 * img[:, :, 2]
    return np.repeat(luma[:, :, None], img.shape[2], axis=2)


def augment(img: np.ndarray, spec: AugmentationSpec, rng: Rng) -> np.ndarray:
    """Apply one random draw of the augmentation pipeline to (h, w, c)."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3:
        raise DataError(f"expected (h, w, c) image, got shape {img.shape}")
    h, w = img.shape[:2]

    angle = rng.uniform(-spec.rotate_degrees, spec.rotate_degrees)
    if angle != 0.0:
        img = rotate(img, angle)

    fraction = rng.uniform(spec.crop_min_fraction, 1.0)
    ch = max(1, round(fraction * h))
    cw = max(1, round(fraction * w))
    oy = rng.below(h - ch + 1)
    ox = rng.below(w - cw + 1)
    if (ch, cw) != (h, w):
        img = crop_resize(img, fraction, oy, ox)

    if rng.random() < spec.flip_probability:
        img = horizontal_flip(img)

    if rng.random() < spec.grayscale_probability:
        img = grayscale(img)

    return np.clip(img, 0.0, 1.0)


def augment_batch(batch: np.ndarray, spec: AugmentationSpec, rng: Rng) -> np.ndarray:
    """Augment (n, h, w, c) with one derived stream per sample."""
    return np.stack(
        [augment(batch[i], spec, rng.spawn(i)) for i in range(batch.shape[0])]
    )
