"""Tier 2 binary in/out-of-distribution classifier and the core classifier.

The binary tier trains on a balanced union of in-distribution images and
generated boundary images (the larger side is downsampled), with batches
interleaved so every batch is label-balanced to within one sample.  The
core classifier is a softmax network over the glyph classes trained with
categorical cross-entropy on augmented batches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data.augment import AugmentationSpec, augment_batch
from ..data.dataset import Dataset
from ..nn.network import Dense, Model, NetworkSpec, dense_stack, forward, init_params
from ..nn.optim import OptimizerState
from ..nn.training import History, train_network
from ..rng import Rng
from .autoencoder import TierError


def _default_binary_spec() -> NetworkSpec:
    return dense_stack([1024, 128, 32, 1], "relu", "sigmoid")


def _default_core_spec() -> NetworkSpec:
    return dense_stack([1024, 256, 64, 10], "relu", "softmax")


@dataclass(frozen=True)
class BinaryClassifierConfig:
    spec: NetworkSpec = field(default_factory=_default_binary_spec)
    epochs: int = 12
    batch_size: int = 64
    learning_rate: float = 0.001
    optimizer: str = "adam"
    decision_threshold: float = 0.5  # gate passes when p_in >= this
    val_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        dense = [l for l in self.spec.layers if isinstance(l, Dense)]
        if not dense or dense[-1].out_size != 1:
            raise TierError("binary classifier must end in a single output")


@dataclass(frozen=True)
class CoreClassifierConfig:
    spec: NetworkSpec = field(default_factory=_default_core_spec)
    classes: int = 10
    epochs: int = 20
    batch_size: int = 64
    learning_rate: float = 0.001
    optimizer: str = "adam"
    augmentation: AugmentationSpec = field(default_factory=AugmentationSpec)
    val_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        dense = [l for l in self.spec.layers if isinstance(l, Dense)]
        if not dense or dense[-1].out_size != self.classes:
            raise TierError(
                f"core classifier must end in {self.classes} outputs"
            )


def _balanced_order(n_in: int, n_out: int):
    """order_fn interleaving two equal-size index halves per epoch."""

    def order(rng: Rng, epoch: int) -> np.ndarray:
        perm_in = rng.spawn(0).permutation(n_in)
        perm_out = n_in + rng.spawn(1).permutation(n_out)
        interleaved = np.empty(n_in + n_out, dtype=np.int64)
        interleaved[0::2] = perm_in
        interleaved[1::2] = perm_out
        return interleaved

    return order


def train_binary(
    in_set: Dataset, generated_set: Dataset, config: BinaryClassifierConfig
) -> tuple[Model, History]:
    """Train p(in-distribution) on in vs generated boundary data."""
    if len(in_set) == 0 or len(generated_set) == 0:
        raise TierError("binary training needs non-empty input sets")
    if not bool(in_set.in_distribution.all()):
        raise TierError("in_set must be all in-distribution")
    if bool(generated_set.in_distribution.any()):
        raise TierError("generated_set must be all out-of-distribution")
    if generated_set.manifest.provenance != "generated-boundary":
        raise TierError("generated_set must carry generated-boundary provenance")

    rng = Rng(config.seed)
    n = min(len(in_set), len(generated_set))
    idx_in = rng.spawn(0).choice(len(in_set), n)
    idx_gen = rng.spawn(1).choice(len(generated_set), n)
    pos = in_set.images[idx_in].reshape(n, -1)
    neg = generated_set.images[idx_gen].reshape(n, -1)

    # Stratified held-out slice for the history's accuracy column.
    n_val = max(1, int(round(n * config.val_fraction)))
    inputs = np.concatenate([pos[n_val:], neg[n_val:]])
    targets = np.concatenate(
        [np.ones((n - n_val, 1)), np.zeros((n - n_val, 1))]
    )
    val_inputs = np.concatenate([pos[:n_val], neg[:n_val]])
    val_targets = np.concatenate([np.ones((n_val, 1)), np.zeros((n_val, 1))])

    params = init_params(config.spec, config.seed)
    if config.epochs == 0:
        return Model(config.spec, params), []

    def accuracy(pred: np.ndarray, target: np.ndarray) -> float:
        return float(((pred >= config.decision_threshold) == (target > 0.5)).mean())

    params, history = train_network(
        config.spec,
        params,
        inputs,
        targets,
        loss_kind="binary-cross-entropy",
        optimizer=OptimizerState(config.optimizer, learning_rate=config.learning_rate),
        epochs=config.epochs,
        batch_size=config.batch_size,
        rng=rng.spawn(2),
        val_inputs=val_inputs,
        val_targets=val_targets,
        accuracy_fn=accuracy,
        order_fn=_balanced_order(n - n_val, n - n_val),
    )
    return Model(config.spec, params), history


def binary_scores(model: Model, images: np.ndarray) -> np.ndarray:
    """p(in-distribution) for (n, h, w, c) or flattened batches."""
    batch = images.reshape(images.shape[0], -1)
    out, _ = forward(model.spec, model.params, batch)
    return out[:, 0]


def binary_score(model: Model, image: np.ndarray) -> float:
    return float(binary_scores(model, image[None])[0])


def train_core(
    train_set: Dataset, config: CoreClassifierConfig
) -> tuple[Model, History]:
    """Train the multi-class classifier on augmented in-distribution data."""
    if not bool(train_set.in_distribution.all()):
        raise TierError("core training data must be all in-distribution")
    labels = train_set.class_labels
    if labels.min() < 0 or labels.max() >= config.classes:
        raise TierError(
            f"class labels outside [0, {config.classes}) in training data"
        )
    rng = Rng(config.seed)
    params = init_params(config.spec, config.seed)
    if config.epochs == 0:
        return Model(config.spec, params), []

    n = len(train_set)
    n_val = max(1, int(round(n * config.val_fraction)))
    order = rng.spawn(0).permutation(n)
    val_idx, train_idx = order[:n_val], order[n_val:]
    flat = train_set.images.reshape(n, -1)
    aug = config.augmentation

    def augment_fn(batch: np.ndarray, stream: Rng) -> np.ndarray:
        shaped = batch.reshape((-1,) + train_set.images.shape[1:])
        return augment_batch(shaped, aug, stream).reshape(batch.shape[0], -1)

    def accuracy(pred: np.ndarray, target: np.ndarray) -> float:
        return float((pred.argmax(axis=1) == target).mean())

    params, history = train_network(
        config.spec,
        params,
        flat[train_idx],
        labels[train_idx],
        loss_kind="categorical-cross-entropy",
        optimizer=OptimizerState(config.optimizer, learning_rate=config.learning_rate),
        epochs=config.epochs,
        batch_size=config.batch_size,
        rng=rng.spawn(1),
        val_inputs=flat[val_idx],
        val_targets=labels[val_idx],
        augment_fn=augment_fn,
        accuracy_fn=accuracy,
    )
    return Model(config.spec, params), history


def classify_batch(model: Model, images: np.ndarray) -> np.ndarray:
    """Class probability rows for (n, h, w, c) or flattened batches."""
    batch = images.reshape(images.shape[0], -1)
    out, _ = forward(model.spec, model.params, batch)
    return out


def classify(model: Model, image: np.ndarray) -> np.ndarray:
    """Probability vector over classes; argmax is the prediction."""
    return classify_batch(model, image[None])[0]
