"""Binary netpbm image files: PGM (P5, grayscale) and PPM (P6, RGB).

Images on disk are 8-bit with maxval 255; in memory they are float64 in
[0, 1], so a write/read round trip preserves pixel values to within one
quantization step (1/255).  Parse errors carry the byte offset at which
the header stopped making sense.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class NetpbmError(Exception):
    """Malformed image file; `position` is the byte offset of the problem."""

    def __init__(self, position: int, message: str):
        self.position = position
        super().__init__(f"byte {position}: {message}")


def write_image(img: np.ndarray, path: str | Path) -> None:
    """Write (h, w, 1) as P5 or (h, w, 3) as P6, quantized to 8 bits."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValueError(f"cannot write image of shape {np.asarray(img).shape}")
    h, w, c = arr.shape
    magic = b"P5" if c == 1 else b"P6"
    data = np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(magic + b"\n%d %d\n255\n" % (w, h))
        f.write(data.tobytes())


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next whitespace-delimited token, skipping '#' comments."""
    n = len(data)
    while pos < n:
        ch = data[pos : pos + 1]
        if ch == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise NetpbmError(pos, "unexpected end of header")
    start = pos
    while pos < n and not data[pos : pos + 1].isspace():
        pos += 1
    return data[start:pos], pos


def read_image(path: str | Path) -> np.ndarray:
    """Read a binary PGM/PPM into float64 (h, w, c) with values in [0, 1]."""
    data = Path(path).read_bytes()
    if data[:2] == b"P5":
        channels = 1
    elif data[:2] == b"P6":
        channels = 3
    else:
        raise NetpbmError(0, f"expected magic P5 or P6, found {data[:2]!r}")
    pos = 2
    fields = []
    for name in ("width", "height", "maxval"):
        token, pos = _read_token(data, pos)
        if not token.isdigit():
            raise NetpbmError(pos - len(token), f"{name} is not a number: {token!r}")
        fields.append(int(token))
    w, h, maxval = fields
    if w <= 0 or h <= 0:
        raise NetpbmError(2, f"bad dimensions {w}x{h}")
    if maxval != 255:
        raise NetpbmError(pos - len(str(maxval)), f"unsupported maxval {maxval}")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise NetpbmError(pos, "missing whitespace after maxval")
    pos += 1
    want = h * w * channels
    raster = data[pos : pos + want]
    if len(raster) != want:
        raise NetpbmError(
            pos + len(raster), f"raster has {len(raster)} of {want} bytes"
        )
    arr = np.frombuffer(raster, dtype=np.uint8).reshape(h, w, channels)
    return arr.astype(np.float64) / 255.0
