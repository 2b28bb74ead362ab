"""Synthetic datasets, augmentation, and image/label disk formats."""

from .augment import (
    IDENTITY_AUGMENTATION,
    AugmentationSpec,
    augment,
    augment_batch,
    crop_resize,
    grayscale,
    horizontal_flip,
    resize,
    rotate,
)
from .dataset import (
    IN,
    NO_CLASS,
    OUT,
    DataError,
    Dataset,
    DatasetManifest,
    LabeledSample,
    make_dataset,
    mix,
)
from .dataset_io import import_directory, load_dataset, save_dataset
from .netpbm import NetpbmError, read_image, write_image
from .synthetic import (
    ALIEN_GLYPHS,
    DEFAULT_GLYPHS,
    OOD_KINDS,
    Glyph,
    SyntheticSpec,
    synth_in_distribution,
    synth_ood,
)

__all__ = [
    "ALIEN_GLYPHS",
    "DEFAULT_GLYPHS",
    "IDENTITY_AUGMENTATION",
    "IN",
    "NO_CLASS",
    "OOD_KINDS",
    "OUT",
    "AugmentationSpec",
    "DataError",
    "Dataset",
    "DatasetManifest",
    "Glyph",
    "LabeledSample",
    "NetpbmError",
    "SyntheticSpec",
    "augment",
    "augment_batch",
    "crop_resize",
    "grayscale",
    "horizontal_flip",
    "import_directory",
    "load_dataset",
    "make_dataset",
    "mix",
    "read_image",
    "resize",
    "rotate",
    "save_dataset",
    "synth_in_distribution",
    "synth_ood",
    "write_image",
]
