"""PGM contact sheets: sample grids, and original/reconstruction/similarity
triptychs for eyeballing what the autoencoder preserves and loses."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data.netpbm import write_image
from .metrics.ssim import SsimParams, ssim_map
from .nn.network import Model
from .tiers.autoencoder import reconstruct


def contact_sheet(
    images: np.ndarray, columns: int = 8, pad: int = 2, pad_value: float = 0.25
) -> np.ndarray:
    """Tile (n, h, w, c) into one image, row-major with padding between cells."""
    n, h, w, c = images.shape
    columns = max(1, min(columns, n))
    rows = (n + columns - 1) // columns
    sheet = np.full(
        (rows * h + (rows + 1) * pad, columns * w + (columns + 1) * pad, c),
        pad_value,
    )
    for i in range(n):
        r, col = divmod(i, columns)
        y = pad + r * (h + pad)
        x = pad + col * (w + pad)
        sheet[y : y + h, x : x + w] = images[i]
    return sheet


def write_contact_sheet(images: np.ndarray, path: str | Path, columns: int = 8) -> None:
    if images.shape[0] == 0:
        write_image(np.full((8, 8, 1), 0.25), path)
        return
    write_image(contact_sheet(images, columns), path)


def _embed(map_values: np.ndarray, height: int, width: int) -> np.ndarray:
    """Center a similarity map on a canvas, rescaled from [-1, 1] to [0, 1]."""
    canvas = np.zeros((height, width))
    mh, mw = map_values.shape
    oy, ox = (height - mh) // 2, (width - mw) // 2
    canvas[oy : oy + mh, ox : ox + mw] = np.clip((map_values + 1.0) / 2.0, 0.0, 1.0)
    return canvas


def write_triptychs(
    model: Model,
    images: np.ndarray,
    path: str | Path,
    ssim_params: SsimParams = SsimParams(),
) -> None:
    """One row per sample: original | reconstruction | similarity map."""
    n, h, w, c = images.shape
    recon = reconstruct(model, images)
    rows = []
    for i in range(n):
        m = _embed(ssim_map(images[i], recon[i], ssim_params), h, w)
        rows.append(
            np.concatenate(
                [images[i][:, :, 0], recon[i][:, :, 0], m], axis=1
            )[:, :, None]
        )
    write_image(contact_sheet(np.stack(rows), columns=1), path)
