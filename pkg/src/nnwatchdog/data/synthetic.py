"""Seeded synthetic image generators.

The in-distribution set is a family of bright glyphs (regular polygons,
rings, bar patterns) rendered with soft edges on a faintly noisy dark
background, jittered in position, scale, rotation, and brightness.  The
out-of-distribution generators emit smoothed texture noise, "alien" glyph
families the in-distribution set never uses, or blends of the two.

Every sample is drawn from its own derived stream, so generation is a pure
function of (spec, seed, n) and parallelizable per sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..rng import Rng, derive_stream
from .dataset import Dataset, NO_CLASS, DataError, make_dataset

EDGE = 1.0  # soft-edge width in pixels


@dataclass(frozen=True)
class Glyph:
    kind: str  # "polygon" | "ring" | "bars"
    param: float  # sides | inner radius fraction | bar count
    horizontal: bool = True  # bars only


DEFAULT_GLYPHS = (
    Glyph("polygon", 3),
    Glyph("ring", 0.55),
    Glyph("ring", 0.0),  # disk
    Glyph("bars", 2, True),
    Glyph("bars", 3, False),
    Glyph("polygon", 4),
    Glyph("polygon", 5),
    Glyph("bars", 3, True),
    Glyph("bars", 2, False),
    Glyph("bars", 4, True),
)


@dataclass(frozen=True)
class SyntheticSpec:
    classes: int = 10
    size: int = 32
    channels: int = 1
    glyphs: tuple[Glyph, ...] = DEFAULT_GLYPHS
    position_jitter: float = 0.15  # pixels
    scale_range: tuple[float, float] = (0.815, 0.83)  # fraction of half-size
    rotation_jitter: float = 1.0  # degrees
    brightness_range: tuple[float, float] = (0.98, 1.0)
    noise_amplitude: float = 0.025

    def __post_init__(self):
        if self.classes < 1 or self.classes > len(self.glyphs):
            raise DataError(
                f"{self.classes} classes but only {len(self.glyphs)} glyph kinds"
            )
        half = self.size / 2.0
        extent = self.scale_range[1] * half + self.position_jitter + EDGE
        if extent > half:
            raise DataError(
                f"jitter violates frame containment: extent {extent:.2f} > {half}"
            )


def _grid(size: int) -> tuple[np.ndarray, np.ndarray]:
    c = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    return np.meshgrid(c, c, indexing="ij")  # (y, x)


def _rotate_coords(y, x, degrees: float):
    t = math.radians(degrees)
    ct, st = math.cos(t), math.sin(t)
    return y * ct - x * st, x * ct + y * st


def _coverage(distance: np.ndarray) -> np.ndarray:
    """Signed boundary distance (inside negative) to soft pixel coverage."""
    return np.clip(0.5 - distance / EDGE, 0.0, 1.0)


def _polygon_distance(y, x, sides: int, radius: float) -> np.ndarray:
    apothem = radius * math.cos(math.pi / sides)
    d = np.full_like(y, -np.inf)
    for k in range(sides):
        ang = math.pi / 2.0 + (2.0 * k + 1.0) * math.pi / sides
        d = np.maximum(d, x * math.cos(ang) + y * math.sin(ang))
    return d - apothem


def _ring_distance(y, x, inner_frac: float, radius: float) -> np.ndarray:
    r = np.sqrt(y * y + x * x)
    mid = radius * (1.0 + inner_frac) / 2.0
    half = radius * (1.0 - inner_frac) / 2.0
    return np.abs(r - mid) - half


def _bars_distance(y, x, count: int, horizontal: bool, radius: float) -> np.ndarray:
    box = np.maximum(np.abs(y), np.abs(x)) - radius
    u = y if horizontal else x
    thickness = 2.0 * radius / (2.0 * count - 1.0)
    centers = -radius + thickness / 2.0 + 2.0 * thickness * np.arange(count)
    stripe = np.min(
        np.abs(u[..., None] - centers), axis=-1
    ) - thickness / 2.0
    return np.maximum(box, stripe)


def glyph_distance(glyph: Glyph, y, x, radius: float) -> np.ndarray:
    if glyph.kind == "polygon":
        return _polygon_distance(y, x, int(glyph.param), radius)
    if glyph.kind == "ring":
        return _ring_distance(y, x, glyph.param, radius)
    if glyph.kind == "bars":
        return _bars_distance(y, x, int(glyph.param), glyph.horizontal, radius)
    raise DataError(f"unknown glyph kind {glyph.kind!r}")


def _render(
    glyph: Glyph, spec: SyntheticSpec, rng: Rng
) -> np.ndarray:
    """One jittered glyph image, values in [0, 1].  Draw order is fixed."""
    dx = rng.uniform(-spec.position_jitter, spec.position_jitter)
    dy = rng.uniform(-spec.position_jitter, spec.position_jitter)
    scale = rng.uniform(*spec.scale_range)
    angle = rng.uniform(-spec.rotation_jitter, spec.rotation_jitter)
    brightness = rng.uniform(*spec.brightness_range)
    noise = rng.random((spec.size, spec.size))

    y, x = _grid(spec.size)
    ry, rx = _rotate_coords(y - dy, x - dx, angle)
    cover = _coverage(glyph_distance(glyph, ry, rx, scale * spec.size / 2.0))
    img = spec.noise_amplitude * noise * (1.0 - cover) + brightness * cover
    return np.clip(img, 0.0, 1.0)


def synth_in_distribution(spec: SyntheticSpec, seed: int, n: int) -> Dataset:
    """n class-balanced in-distribution glyph samples (class = index mod K)."""
    if n < spec.classes:
        raise DataError(f"need at least one sample per class: n={n} < K={spec.classes}")
    images = np.empty((n, spec.size, spec.size, spec.channels))
    labels = np.empty(n, dtype=np.int64)
    for i in range(n):
        cls = i % spec.classes
        rng = Rng(derive_stream(seed, i))
        plane = _render(spec.glyphs[cls], spec, rng)
        images[i] = plane[:, :, None].repeat(spec.channels, axis=2)
        labels[i] = cls
    return make_dataset(
        images,
        labels,
        np.ones(n, dtype=bool),
        name=f"synthetic-in-{seed}",
        classes=spec.classes,
        seed=seed,
        provenance="synthetic-in",
    )


# -- out-of-distribution ---------------------------------------------------

ALIEN_GLYPHS = (
    "giant-triangle",
    "giant-ring",
    "giant-disk",
    "giant-bars-h",
    "giant-bars-v",
    "inverted-triangle",
    "checker",
    "diag-stripes",
)

TEXTURE_GLYPHS = (
    "checker",
    "diag-stripes",
    "frame",
    "dot-grid",
    "concentric-rings",
    "diag-checker",
)

OOD_KINDS = ("texture-noise", "alien-glyphs", "blended")


def _box_blur(img: np.ndarray, k: int) -> np.ndarray:
    out = img
    kernel = np.ones(k) / k
    for axis in (0, 1):
        out = np.apply_along_axis(
            lambda v: np.convolve(v, kernel, mode="valid"), axis, out
        )
    return out


def _texture_noise(size: int, rng: Rng) -> np.ndarray:
    pad = 4
    raw = rng.random((size + pad, size + pad))
    sm = _box_blur(raw, pad + 1)
    lo, hi = sm.min(), sm.max()
    return 0.05 + 0.90 * (sm - lo) / (hi - lo)


def _alien_cover(kind: str, size: int, rng: Rng) -> np.ndarray:
    y, x = _grid(size)
    angle = rng.uniform(-10.0, 10.0)
    ry, rx = _rotate_coords(y, x, angle)
    half = size / 2.0
    r = 0.80 * half
    if kind.startswith("giant-") or kind.startswith("inverted-"):
        # In-family shapes pushed outside the in-distribution parameter
        # range: they overflow the frame (or invert its contrast), which no
        # in-distribution sample ever does.
        scale = rng.uniform(1.15, 1.45)
        shape = kind.split("-", 1)[1]
        big = scale * half
        if shape == "triangle":
            d = _polygon_distance(ry, rx, 3, big)
        elif shape == "ring":
            d = _ring_distance(ry, rx, 0.55, big)
        elif shape == "disk":
            d = _ring_distance(ry, rx, 0.0, big)
        elif shape == "bars-h":
            d = _bars_distance(ry, rx, 2, True, big)
        elif shape == "bars-v":
            d = _bars_distance(ry, rx, 3, False, big)
        else:
            raise DataError(f"unknown alien glyph {kind!r}")
        cover = _coverage(d)
        return 1.0 - cover if kind.startswith("inverted-") else cover
    if kind == "checker":
        cell = size / 5.0
        return ((np.floor(ry / cell) + np.floor(rx / cell)) % 2.0).astype(np.float64)
    if kind == "diag-stripes":
        period = size / 4.0
        u = (ry + rx) / math.sqrt(2.0)
        phase = np.mod(u, period)
        return (phase < period / 2.0).astype(np.float64)
    if kind == "frame":
        outer = np.maximum(np.abs(ry), np.abs(rx)) - r
        inner = np.maximum(np.abs(ry), np.abs(rx)) - 0.55 * r
        return _coverage(np.maximum(outer, -inner))
    if kind == "dot-grid":
        pitch = size / 4.0
        my = np.mod(ry + pitch / 2.0, pitch) - pitch / 2.0
        mx = np.mod(rx + pitch / 2.0, pitch) - pitch / 2.0
        return _coverage(np.sqrt(my * my + mx * mx) - 0.32 * pitch)
    if kind == "concentric-rings":
        period = size / 4.0
        rad = np.sqrt(ry * ry + rx * rx)
        return _coverage(np.abs(np.mod(rad, period) - period / 2.0) - period / 4.0)
    if kind == "diag-checker":
        cell = size / 5.0
        dy, dx = _rotate_coords(ry, rx, 45.0)
        return ((np.floor(dy / cell) + np.floor(dx / cell)) % 2.0).astype(np.float64)
    raise DataError(f"unknown alien glyph {kind!r}")


def synth_ood(
    kind: str, seed: int, n: int, size: int = 32, channels: int = 1
) -> Dataset:
    """n out-of-distribution samples; class label is always absent."""
    if kind not in OOD_KINDS:
        raise DataError(f"unknown out-of-distribution kind {kind!r}")
    images = np.empty((n, size, size, channels))
    for i in range(n):
        rng = Rng(derive_stream(seed, i))
        if kind == "texture-noise":
            plane = _texture_noise(size, rng)
        else:
            alien = ALIEN_GLYPHS[i % len(ALIEN_GLYPHS)]
            brightness = rng.uniform(0.85, 1.0)
            cover = _alien_cover(alien, size, rng.spawn(0))
            noise = rng.random((size, size))
            plane = 0.06 * noise * (1.0 - cover) + brightness * cover
            if kind == "blended":
                plane = 0.5 * plane + 0.5 * _texture_noise(size, rng.spawn(1))
        images[i] = np.clip(plane, 0.0, 1.0)[:, :, None].repeat(channels, axis=2)
    return make_dataset(
        images,
        np.full(n, NO_CLASS, dtype=np.int64),
        np.zeros(n, dtype=bool),
        name=f"synthetic-ood-{kind}-{seed}",
        classes=0,
        seed=seed,
        provenance="synthetic-ood",
    )
