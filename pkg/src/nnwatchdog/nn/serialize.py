"""Model file I/O.

Layout (all integers little-endian):

    magic   4 bytes  b"NNWD"
    version u16      currently 1
    spec    u32 length + UTF-8 canonical text (seed/epochs lines + layers)
    count   u64      number of tensors that follow
    tensor* rank u8, each dim u32, values as little-endian IEEE-754 float64
    crc     u32      CRC32 of everything before it (magic included)

Tensors appear in layer order, weights then bias per dense layer.  Loading
verifies magic, version, and checksum before any state is constructed, and
round-trips every value bit-exactly.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .network import Model, NetworkSpec, ParameterSet, spec_from_text, spec_to_text

MAGIC = b"NNWD"
VERSION = 1


class ModelFileError(Exception):
    pass


class NotModelFileError(ModelFileError):
    pass


class ChecksumError(ModelFileError):
    pass


def _pack_tensor(arr: np.ndarray) -> bytes:
    parts = [struct.pack("<B", arr.ndim)]
    for dim in arr.shape:
        parts.append(struct.pack("<I", dim))
    parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(parts)


def save_params(spec: NetworkSpec, params: ParameterSet, path: str | Path) -> None:
    text = spec_to_text(spec, params.seed, params.epochs_trained).encode("utf-8")
    tensors: list[np.ndarray] = []
    for i in sorted(params.weights):
        tensors.append(params.weights[i])
        tensors.append(params.biases[i])
    body = [
        MAGIC,
        struct.pack("<H", VERSION),
        struct.pack("<I", len(text)),
        text,
        struct.pack("<Q", len(tensors)),
    ]
    body.extend(_pack_tensor(t) for t in tensors)
    payload = b"".join(body)
    blob = payload + struct.pack("<I", zlib.crc32(payload))
    Path(path).write_bytes(blob)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelFileError(
                f"truncated model file: wanted {n} bytes at offset {self.pos}"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return struct.unpack("<B", self.take(1))[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]


def load_params(path: str | Path) -> tuple[NetworkSpec, ParameterSet]:
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise NotModelFileError(f"{path}: not a model file (bad magic)")
    if len(data) < 8:
        raise ModelFileError(f"{path}: truncated model file")
    payload, crc_bytes = data[:-4], data[-4:]
    if zlib.crc32(payload) != struct.unpack("<I", crc_bytes)[0]:
        raise ChecksumError(f"{path}: payload checksum mismatch")

    r = _Reader(payload)
    r.take(4)  # magic
    version = r.u16()
    if version != VERSION:
        raise ModelFileError(f"{path}: unsupported format version {version}")
    text = r.take(r.u32()).decode("utf-8")
    spec, seed, epochs = spec_from_text(text)
    count = r.u64()
    dense = spec.dense_indices()
    if count != 2 * len(dense):
        raise ModelFileError(
            f"{path}: {count} tensors for {len(dense)} dense layers"
        )
    weights: dict[int, np.ndarray] = {}
    biases: dict[int, np.ndarray] = {}
    for i in dense:
        for store in (weights, biases):
            rank = r.u8()
            shape = tuple(r.u32() for _ in range(rank))
            n = int(np.prod(shape)) if shape else 1
            raw = r.take(8 * n)
            store[i] = np.frombuffer(raw, dtype="<f8").reshape(shape).astype(
                np.float64
            )
    if r.pos != len(payload):
        raise ModelFileError(f"{path}: {len(payload) - r.pos} trailing bytes")
    params = ParameterSet(weights, biases, seed=seed, epochs_trained=epochs)
    return spec, params


def save_model(model: Model, path: str | Path) -> None:
    save_params(model.spec, model.params, path)


def load_model(path: str | Path) -> Model:
    spec, params = load_params(path)
    return Model(spec, params)
