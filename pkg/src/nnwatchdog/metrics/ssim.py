"""Structural similarity between two images, plus RMSE.

The local score of a window pair is the product form

    (2*mu_x*mu_y + C1) * (2*cov_xy + C2)
    -----------------------------------------,   C1 = (K1*L)**2, C2 = (K2*L)**2
    (mu_x^2 + mu_y^2 + C1) * (var_x + var_y + C2)

with uniform-window statistics and population (1/N) variances.  Windowed
mode averages the local score over every stride-1 window; global mode uses
one window covering the whole image.  An identical image pair scores 1.0
exactly, and the score is symmetric in its arguments.

A diagnostics-only "sum" form, which adds the two numerator factors instead
of multiplying them, is available for comparison; it does not score 1.0 on
identical inputs and nothing in the package thresholds on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class SsimError(Exception):
    pass


@dataclass(frozen=True)
class SsimParams:
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 1.0
    window: int = 7
    aggregation: str = "windowed-mean"  # or "global"

    def __post_init__(self):
        if not (0.0 < self.k1 < 1.0 and 0.0 < self.k2 < 1.0):
            raise SsimError("k1 and k2 must be small positive constants")
        if self.data_range <= 0.0:
            raise SsimError("data range must be positive")
        if self.window < 1 or self.window % 2 == 0:
            raise SsimError("window side must be odd and positive")
        if self.aggregation not in ("windowed-mean", "global"):
            raise SsimError(f"unknown aggregation {self.aggregation!r}")

    @property
    def c1(self) -> float:
        return (self.k1 * self.data_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.data_range) ** 2


def _plane(img: np.ndarray) -> list[np.ndarray]:
    """Split (h, w) / (h, w, 1) / (h, w, 3) into 2-D channel planes."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        return [arr]
    if arr.ndim == 3 and arr.shape[2] in (1, 3):
        return [arr[:, :, c] for c in range(arr.shape[2])]
    raise SsimError(f"expected an image of shape (h, w[, c]), got {arr.shape}")


@lru_cache(maxsize=64)
def window_index(height: int, width: int, window: int) -> np.ndarray:
    """Flat pixel indices of every stride-1 window: (n_windows, window**2).

    Cached per shape; treat the returned array as read-only.
    """
    if window > height or window > width:
        raise SsimError(
            f"window {window} larger than image {height}x{width}"
        )
    base = np.arange(window)[:, None] * width + np.arange(window)[None, :]
    rows = np.arange(height - window + 1)[:, None] * width
    cols = np.arange(width - window + 1)[None, :]
    starts = (rows + cols).ravel()
    return starts[:, None] + base.ravel()[None, :]


def _local_scores(
    x: np.ndarray, y: np.ndarray, p: SsimParams, form: str
) -> np.ndarray:
    """Per-window scores of one channel plane, flattened."""
    h, w = x.shape
    if p.aggregation == "global":
        idx = np.arange(x.size)[None, :]
    else:
        idx = window_index(h, w, p.window)
    xf, yf = x.ravel(), y.ravel()
    mu_x = xf[idx].mean(axis=1)
    mu_y = yf[idx].mean(axis=1)
    xx = (xf * xf)[idx].mean(axis=1)
    yy = (yf * yf)[idx].mean(axis=1)
    xy = (xf * yf)[idx].mean(axis=1)
    var_x = xx - mu_x * mu_x
    var_y = yy - mu_y * mu_y
    cov = xy - mu_x * mu_y
    lum = 2.0 * mu_x * mu_y + p.c1
    struct = 2.0 * cov + p.c2
    denom = (mu_x * mu_x + mu_y * mu_y + p.c1) * (var_x + var_y + p.c2)
    if form == "product":
        return lum * struct / denom
    if form == "sum":
        return (lum + struct) / denom
    raise SsimError(f"unknown form {form!r}")


def _check_pair(x: np.ndarray, y: np.ndarray, p: SsimParams) -> None:
    if np.shape(x) != np.shape(y):
        raise SsimError(f"image shapes differ: {np.shape(x)} vs {np.shape(y)}")
    for arr in (x, y):
        a = np.asarray(arr)
        if a.min() < 0.0 or a.max() > p.data_range:
            raise SsimError(f"values outside [0, {p.data_range}]")


def ssim(
    x: np.ndarray,
    y: np.ndarray,
    p: SsimParams = SsimParams(),
    form: str = "product",
) -> float:
    """Structural similarity score of an image pair; at most 1."""
    _check_pair(x, y, p)
    planes = list(zip(_plane(x), _plane(y)))
    scores = [_local_scores(px, py, p, form) for px, py in planes]
    return float(np.mean([s.mean() for s in scores]))


def ssim_map(
    x: np.ndarray,
    y: np.ndarray,
    p: SsimParams = SsimParams(),
    form: str = "product",
) -> np.ndarray:
    """Per-window local scores arranged as a map; its mean equals ssim().

    Windowed mode gives an (h - window + 1, w - window + 1) map (channel
    scores averaged); global mode gives a 1x1 map.
    """
    _check_pair(x, y, p)
    planes = list(zip(_plane(x), _plane(y)))
    scores = [_local_scores(px, py, p, form) for px, py in planes]
    stacked = np.mean(scores, axis=0)
    if p.aggregation == "global":
        return stacked.reshape(1, 1)
    h, w = np.asarray(x).shape[:2]
    return stacked.reshape(h - p.window + 1, w - p.window + 1)


def rmse(x: np.ndarray, y: np.ndarray) -> float:
    """Root mean squared error over all elements."""
    ax, ay = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if ax.shape != ay.shape:
        raise SsimError(f"image shapes differ: {ax.shape} vs {ay.shape}")
    diff = ax - ay
    return float(np.sqrt(np.mean(diff * diff)))
