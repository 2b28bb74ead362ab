"""Trained gate tiers and the core classifier."""

from .autoencoder import (
    PASS,
    REJECT,
    AutoencoderConfig,
    CalibrationReport,
    ThresholdConfig,
    TierError,
    calibrate,
    reconstruct,
    tier1_gate,
    tier1_score,
    tier1_scores,
    train_autoencoder,
)
from .classifiers import (
    BinaryClassifierConfig,
    CoreClassifierConfig,
    binary_score,
    binary_scores,
    classify,
    classify_batch,
    train_binary,
    train_core,
)

__all__ = [
    "PASS",
    "REJECT",
    "AutoencoderConfig",
    "BinaryClassifierConfig",
    "CalibrationReport",
    "CoreClassifierConfig",
    "ThresholdConfig",
    "TierError",
    "binary_score",
    "binary_scores",
    "calibrate",
    "classify",
    "classify_batch",
    "reconstruct",
    "tier1_gate",
    "tier1_score",
    "tier1_scores",
    "train_autoencoder",
    "train_core",
    "train_binary",
]
