"""Tier 1: autoencoder reconstruction gate.

The autoencoder is trained to reproduce in-distribution images through a
strictly narrower latent layer.  An input is scored by the structural
similarity between itself and its reconstruction; the gate passes scores at
or above a threshold tau.  `calibrate` sweeps tau over a grid against
held-out in/out-of-distribution data, reports the ROC, and recommends the
band of thresholds whose Youden index (TPR - FPR) sits within 0.02 of the
maximum, choosing the band midpoint unless a fixed tau is configured.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..data.augment import AugmentationSpec, augment_batch
from ..data.dataset import Dataset
from ..metrics.roc import POS, NEG, RocCurve, roc
from ..metrics.ssim import SsimParams, ssim
from ..nn.network import Model, NetworkSpec, Dense, dense_stack, forward, init_params
from ..nn.training import History, train_network
from ..nn.optim import OptimizerState
from ..rng import Rng

PASS = "PASS"
REJECT = "REJECT"


class TierError(Exception):
    pass


def _default_ae_spec() -> NetworkSpec:
    return dense_stack([1024, 256, 64, 256, 1024], "relu", "sigmoid")


@dataclass(frozen=True)
class AutoencoderConfig:
    spec: NetworkSpec = field(default_factory=_default_ae_spec)
    epochs: int = 15
    batch_size: int = 64
    learning_rate: float = 0.001
    optimizer: str = "adam"
    augmentation: AugmentationSpec = field(default_factory=AugmentationSpec)
    val_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        sizes = [l for l in self.spec.layers if isinstance(l, Dense)]
        if not sizes:
            raise TierError("autoencoder needs dense layers")
        if sizes[0].in_size != sizes[-1].out_size:
            raise TierError("autoencoder input and output sizes must match")
        latent = min(l.out_size for l in sizes)
        if latent >= sizes[0].in_size:
            raise TierError("autoencoder needs a latent layer narrower than its input")


@dataclass(frozen=True)
class ThresholdConfig:
    tau: float | None = 0.85  # None: pick from the sweep
    sweep_start: float = 0.0
    sweep_stop: float = 1.0
    sweep_step: float = 0.005

    def grid(self) -> np.ndarray:
        count = int(round((self.sweep_stop - self.sweep_start) / self.sweep_step)) + 1
        return np.round(self.sweep_start + self.sweep_step * np.arange(count), 10)


@dataclass(frozen=True)
class CalibrationReport:
    curve: RocCurve
    recommended_low: float
    recommended_high: float
    chosen_tau: float
    tau_overridden: bool
    class_mean_scores: dict[int, float]
    ood_mean_score: float

    def to_json(self, path: str | Path | None = None) -> str:
        payload = {
            "auc": self.curve.auc,
            "recommended_low": self.recommended_low,
            "recommended_high": self.recommended_high,
            "chosen_tau": self.chosen_tau,
            "tau_overridden": self.tau_overridden,
            "class_mean_scores": {str(k): v for k, v in self.class_mean_scores.items()},
            "ood_mean_score": self.ood_mean_score,
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def train_autoencoder(
    train_set: Dataset, config: AutoencoderConfig
) -> tuple[Model, History]:
    """Train the reconstruction network on in-distribution images.

    Deterministic for a fixed config: the train/validation split, batch
    order, and augmentation draws all derive from config.seed.
    """
    if not bool(train_set.in_distribution.all()):
        raise TierError("autoencoder training data must be all in-distribution")
    rng = Rng(config.seed)
    params = init_params(config.spec, config.seed)
    n = len(train_set)
    n_val = max(1, int(round(n * config.val_fraction))) if config.epochs > 0 else 0
    if config.epochs == 0:
        return Model(config.spec, params), []

    order = rng.spawn(0).permutation(n)
    val_idx, train_idx = order[:n_val], order[n_val:]
    flat = train_set.images.reshape(n, -1)
    aug = config.augmentation

    def augment_fn(batch: np.ndarray, stream: Rng) -> np.ndarray:
        shaped = batch.reshape((-1,) + train_set.images.shape[1:])
        return augment_batch(shaped, aug, stream).reshape(batch.shape[0], -1)

    params, history = train_network(
        config.spec,
        params,
        flat[train_idx],
        flat[train_idx],
        loss_kind="mse",
        optimizer=OptimizerState(config.optimizer, learning_rate=config.learning_rate),
        epochs=config.epochs,
        batch_size=config.batch_size,
        rng=rng.spawn(1),
        val_inputs=flat[val_idx],
        val_targets=flat[val_idx],
        augment_fn=augment_fn,
        self_target=True,
    )
    return Model(config.spec, params), history


def reconstruct(model: Model, images: np.ndarray) -> np.ndarray:
    """Autoencoder output reshaped to the input image dims; (n, h, w, c)."""
    single = images.ndim == 3
    batch = images[None] if single else images
    out, _ = forward(model.spec, model.params, batch.reshape(batch.shape[0], -1))
    recon = out.reshape(batch.shape)
    return recon[0] if single else recon


def tier1_score(model: Model, image: np.ndarray, p: SsimParams = SsimParams()) -> float:
    """Structural similarity between an image and its reconstruction."""
    return ssim(image, reconstruct(model, image), p)


def tier1_scores(
    model: Model, images: np.ndarray, p: SsimParams = SsimParams()
) -> np.ndarray:
    """Vectorized tier1_score over (n, h, w, c)."""
    recon = reconstruct(model, images)
    return np.array([ssim(images[i], recon[i], p) for i in range(images.shape[0])])


def tier1_gate(score: float, tau: float) -> str:
    """PASS at or above tau (the boundary is inclusive), REJECT below."""
    return PASS if score >= tau else REJECT


def snap_to_grid(value: float, config: ThresholdConfig) -> float:
    grid = config.grid()
    return float(grid[np.argmin(np.abs(grid - value))])


def calibrate(
    model: Model,
    in_val: Dataset,
    ood_val: Dataset,
    threshold_config: ThresholdConfig = ThresholdConfig(),
    ssim_params: SsimParams = SsimParams(),
) -> CalibrationReport:
    """Sweep tau against held-out data; in-distribution is the positive class."""
    if len(in_val) == 0 or len(ood_val) == 0:
        raise TierError("calibration needs non-empty in- and out-of-distribution sets")
    in_scores = tier1_scores(model, in_val.images, ssim_params)
    ood_scores = tier1_scores(model, ood_val.images, ssim_params)
    scores = np.concatenate([in_scores, ood_scores])
    labels = [POS] * len(in_scores) + [NEG] * len(ood_scores)
    curve = roc(scores, labels)

    grid = threshold_config.grid()
    tpr = (in_scores[None, :] >= grid[:, None]).mean(axis=1)
    fpr = (ood_scores[None, :] >= grid[:, None]).mean(axis=1)
    youden = tpr - fpr
    band = grid[youden >= youden.max() - 0.02]
    low, high = float(band[0]), float(band[-1])
    if threshold_config.tau is not None:
        chosen = snap_to_grid(threshold_config.tau, threshold_config)
        overridden = True
    else:
        chosen = snap_to_grid((low + high) / 2.0, threshold_config)
        overridden = False

    class_means: dict[int, float] = {}
    for k in sorted(set(int(c) for c in in_val.class_labels if c >= 0)):
        class_means[k] = float(in_scores[in_val.class_labels == k].mean())
    return CalibrationReport(
        curve=curve,
        recommended_low=low,
        recommended_high=high,
        chosen_tau=chosen,
        tau_overridden=overridden,
        class_mean_scores=class_means,
        ood_mean_score=float(ood_scores.mean()),
    )
