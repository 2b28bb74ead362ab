"""Similarity, error, and ranking metrics used across the watchdog tiers."""

from .reports import AccuracyReport, ReportError, accuracy_report
from .roc import NEG, POS, RocCurve, RocError, normalized_multiclass_roc, roc
from .ssim import SsimError, SsimParams, rmse, ssim, ssim_map, window_index

__all__ = [
    "NEG",
    "POS",
    "AccuracyReport",
    "ReportError",
    "RocCurve",
    "RocError",
    "SsimError",
    "SsimParams",
    "accuracy_report",
    "normalized_multiclass_roc",
    "rmse",
    "roc",
    "ssim",
    "ssim_map",
    "window_index",
]
