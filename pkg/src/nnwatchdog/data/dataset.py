"""In-memory dataset container with dual labels.

Images are float64 arrays of shape (n, height, width, channels) with values
in [0, 1].  Each sample carries a class label (-1 when it has none) and an
in/out-of-distribution flag; out-of-distribution samples from external
sources never carry a class label.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from ..rng import Rng

IN = "IN"
OUT = "OUT"
NO_CLASS = -1

PROVENANCES = ("synthetic-in", "synthetic-ood", "imported", "generated-boundary", "mixed")


class DataError(Exception):
    pass


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    count: int
    classes: int
    width: int
    height: int
    channels: int
    seed: int
    provenance: str
    sources: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise DataError(f"unknown provenance {self.provenance!r}")


@dataclass(frozen=True)
class LabeledSample:
    image: np.ndarray
    class_label: int | None
    distribution_label: str  # IN or OUT


@dataclass
class Dataset:
    images: np.ndarray  # (n, h, w, c)
    class_labels: np.ndarray  # (n,) int64, NO_CLASS where absent
    in_distribution: np.ndarray  # (n,) bool
    manifest: DatasetManifest

    def __post_init__(self):
        if self.images.ndim != 4:
            raise DataError(f"images must be (n, h, w, c), got {self.images.shape}")
        n = self.images.shape[0]
        if self.class_labels.shape != (n,) or self.in_distribution.shape != (n,):
            raise DataError("label arrays do not match image count")
        if self.manifest.count != n:
            raise DataError(
                f"manifest count {self.manifest.count} != {n} stored samples"
            )
        if n and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise DataError("image values outside [0, 1]")

    def __len__(self) -> int:
        return self.images.shape[0]

    def sample(self, i: int) -> LabeledSample:
        label = int(self.class_labels[i])
        return LabeledSample(
            image=self.images[i],
            class_label=None if label == NO_CLASS else label,
            distribution_label=IN if self.in_distribution[i] else OUT,
        )

    def subset(self, index: np.ndarray, name: str | None = None) -> "Dataset":
        index = np.asarray(index)
        manifest = replace(
            self.manifest,
            name=name or self.manifest.name,
            count=int(index.size) if index.dtype != bool else int(index.sum()),
        )
        return Dataset(
            self.images[index].copy(),
            self.class_labels[index].copy(),
            self.in_distribution[index].copy(),
            manifest,
        )

    def content_hash(self) -> str:
        """Identity hash over pixel values and both label series."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.images, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.class_labels, dtype="<i8").tobytes())
        h.update(np.packbits(self.in_distribution).tobytes())
        return h.hexdigest()


def make_dataset(
    images: np.ndarray,
    class_labels: np.ndarray,
    in_distribution: np.ndarray,
    *,
    name: str,
    classes: int,
    seed: int,
    provenance: str,
    sources: dict[str, int] | None = None,
) -> Dataset:
    images = np.asarray(images, dtype=np.float64)
    n, h, w, c = images.shape
    manifest = DatasetManifest(
        name=name,
        count=n,
        classes=classes,
        width=w,
        height=h,
        channels=c,
        seed=seed,
        provenance=provenance,
        sources=sources or {},
    )
    return Dataset(
        images,
        np.asarray(class_labels, dtype=np.int64),
        np.asarray(in_distribution, dtype=bool),
        manifest,
    )


def mix(in_set: Dataset, ood_sets: list[Dataset], seed: int, name: str = "mixed") -> Dataset:
    """Concatenate then shuffle with a seeded permutation; labels ride along."""
    parts = [in_set] + list(ood_sets)
    dims = {(d.manifest.height, d.manifest.width, d.manifest.channels) for d in parts}
    if len(dims) != 1:
        raise DataError(f"cannot mix datasets with differing dims: {sorted(dims)}")
    images = np.concatenate([d.images for d in parts], axis=0)
    labels = np.concatenate([d.class_labels for d in parts])
    flags = np.concatenate([d.in_distribution for d in parts])
    order = Rng(seed).permutation(images.shape[0])
    sources: dict[str, int] = {}
    for d in parts:
        key = d.manifest.name
        while key in sources:
            key += "+"
        sources[key] = len(d)
    return make_dataset(
        images[order],
        labels[order],
        flags[order],
        name=name,
        classes=in_set.manifest.classes,
        seed=seed,
        provenance="mixed",
        sources=sources,
    )
