"""Dataset directories on disk.

A dataset directory holds one netpbm file per sample, `labels.csv` with
header ``filename,class_label,distribution_label`` (class column empty for
unlabeled samples), and `manifest.json` describing the set.  Loading checks
the manifest against what is actually present.  A foreign directory of
netpbm files without a manifest can be imported as-is.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .augment import grayscale
from .dataset import (
    IN,
    NO_CLASS,
    OUT,
    DataError,
    Dataset,
    DatasetManifest,
    make_dataset,
)
from .netpbm import read_image, write_image

LABELS_FILE = "labels.csv"
MANIFEST_FILE = "manifest.json"


def save_dataset(dataset: Dataset, directory: str | Path) -> None:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    ext = "pgm" if dataset.manifest.channels == 1 else "ppm"
    rows = []
    for i in range(len(dataset)):
        filename = f"{i:06d}.{ext}"
        write_image(dataset.images[i], out / filename)
        label = int(dataset.class_labels[i])
        rows.append(
            [
                filename,
                "" if label == NO_CLASS else str(label),
                IN if dataset.in_distribution[i] else OUT,
            ]
        )
    with open(out / LABELS_FILE, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["filename", "class_label", "distribution_label"])
        w.writerows(rows)
    m = dataset.manifest
    manifest = {
        "name": m.name,
        "count": m.count,
        "classes": m.classes,
        "width": m.width,
        "height": m.height,
        "channels": m.channels,
        "seed": m.seed,
        "provenance": m.provenance,
    }
    if m.sources:
        manifest["sources"] = m.sources
    (out / MANIFEST_FILE).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _read_labels(path: Path) -> list[tuple[str, int, bool]]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["filename", "class_label", "distribution_label"]:
            raise DataError(f"{path}: unexpected header {header}")
        rows = []
        for row in reader:
            if len(row) != 3:
                raise DataError(f"{path}: malformed row {row}")
            filename, cls, dist = row
            if dist not in (IN, OUT):
                raise DataError(f"{path}: bad distribution label {dist!r}")
            rows.append((filename, int(cls) if cls else NO_CLASS, dist == IN))
    return rows


def load_dataset(directory: str | Path) -> Dataset:
    src = Path(directory)
    manifest_path = src / MANIFEST_FILE
    if not manifest_path.exists():
        raise DataError(f"{src}: missing {MANIFEST_FILE}")
    raw = json.loads(manifest_path.read_text(encoding="utf-8"))
    manifest = DatasetManifest(
        name=raw["name"],
        count=raw["count"],
        classes=raw["classes"],
        width=raw["width"],
        height=raw["height"],
        channels=raw["channels"],
        seed=raw["seed"],
        provenance=raw["provenance"],
        sources=raw.get("sources", {}),
    )
    rows = _read_labels(src / LABELS_FILE)
    if len(rows) != manifest.count:
        raise DataError(
            f"{src}: manifest says {manifest.count} samples, "
            f"{LABELS_FILE} has {len(rows)}"
        )
    images = np.empty(
        (manifest.count, manifest.height, manifest.width, manifest.channels)
    )
    labels = np.empty(manifest.count, dtype=np.int64)
    flags = np.empty(manifest.count, dtype=bool)
    for i, (filename, cls, is_in) in enumerate(rows):
        img_path = src / filename
        if not img_path.exists():
            raise DataError(f"{src}: {LABELS_FILE} references missing file {filename}")
        img = read_image(img_path)
        if img.shape != (manifest.height, manifest.width, manifest.channels):
            raise DataError(f"{src}/{filename}: shape {img.shape} != manifest dims")
        images[i] = img
        labels[i] = cls
        flags[i] = is_in
    return Dataset(images, labels, flags, manifest)


def import_directory(
    directory: str | Path,
    *,
    distribution: str = IN,
    as_grayscale: bool = True,
    name: str | None = None,
) -> Dataset:
    """Build a dataset from a bare directory of PGM/PPM files.

    Files are read in sorted name order.  If a labels.csv is present its
    labels are used; otherwise every sample gets the given distribution flag
    and no class label.  Color images are reduced to luma when
    `as_grayscale` (the pipelines here are single-channel).
    """
    src = Path(directory)
    labels_path = src / LABELS_FILE
    if labels_path.exists():
        rows = _read_labels(labels_path)
        files = [(src / fn, cls, is_in) for fn, cls, is_in in rows]
    else:
        paths = sorted(
            p for p in src.iterdir() if p.suffix.lower() in (".pgm", ".ppm")
        )
        files = [(p, NO_CLASS, distribution == IN) for p in paths]
    if not files:
        raise DataError(f"{src}: no netpbm images to import")
    images = []
    for path, _, _ in files:
        if not path.exists():
            raise DataError(f"{src}: labels reference missing file {path.name}")
        img = read_image(path)
        if as_grayscale and img.shape[2] == 3:
            img = grayscale(img)[:, :, :1]
        images.append(img)
    shapes = {img.shape for img in images}
    if len(shapes) != 1:
        raise DataError(f"{src}: mixed image shapes {sorted(shapes)}")
    labels = np.array([cls for _, cls, _ in files], dtype=np.int64)
    classes = int(labels.max()) + 1 if labels.max() >= 0 else 0
    return make_dataset(
        np.stack(images),
        labels,
        np.array([flag for _, _, flag in files], dtype=bool),
        name=name or src.name,
        classes=classes,
        seed=0,
        provenance="imported",
    )
