"""Shared minibatch training loop used by every trained component.

The loop is deterministic for a fixed seed: batch order comes from the
caller-supplied Rng, augmentation (if any) draws from per-epoch child
streams, and no other randomness exists.  History rows carry per-epoch
train/validation loss and, when an accuracy function is supplied, matching
accuracies.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from ..rng import Rng
from .losses import attach_loss, loss
from .network import NetworkSpec, ParameterSet, backward, forward
from .optim import OptimizerState, optimizer_step


class TrainingDiverged(Exception):
    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"non-finite loss at epoch {epoch}")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    train_acc: float | None = None
    val_acc: float | None = None


History = list[EpochStats]

AugmentFn = Callable[[np.ndarray, Rng], np.ndarray]
AccuracyFn = Callable[[np.ndarray, np.ndarray], float]
OrderFn = Callable[[Rng, int], np.ndarray]


def train_network(
    spec: NetworkSpec,
    params: ParameterSet,
    inputs: np.ndarray,
    targets: np.ndarray,
    *,
    loss_kind: str,
    optimizer: OptimizerState,
    epochs: int,
    batch_size: int,
    rng: Rng,
    val_inputs: np.ndarray,
    val_targets: np.ndarray,
    augment_fn: AugmentFn | None = None,
    accuracy_fn: AccuracyFn | None = None,
    order_fn: OrderFn | None = None,
    self_target: bool = False,
) -> tuple[ParameterSet, History]:
    """Train in place for `epochs` passes; returns (params, history).

    inputs are (n, ...) and flattened per forward(); targets are whatever the
    loss kind expects.  order_fn may replace the default full shuffle (the
    balanced binary trainer interleaves labels with it).  With self_target
    the loss target is the (augmented) batch itself, as an autoencoder wants.
    """
    n = inputs.shape[0]
    history: History = []
    for epoch in range(1, epochs + 1):
        epoch_rng = rng.spawn(epoch)
        if order_fn is not None:
            order = order_fn(epoch_rng.spawn(0), epoch)
        else:
            order = epoch_rng.spawn(0).permutation(n)
        aug_rng = epoch_rng.spawn(1)

        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            batch = inputs[idx]
            if augment_fn is not None:
                batch = augment_fn(batch, aug_rng.spawn(start))
            out, tape = forward(spec, params, batch)
            batch_targets = batch.reshape(batch.shape[0], -1) if self_target else targets[idx]
            batch_loss = attach_loss(tape, loss_kind, batch_targets)
            if not np.isfinite(batch_loss):
                raise TrainingDiverged(epoch)
            grads = backward(tape)
            optimizer_step(optimizer, params, grads)
            total += batch_loss * idx.size

        train_loss = total / n
        val_out, _ = forward(spec, params, val_inputs)
        val_loss = loss(loss_kind, val_out, val_targets)
        if not np.isfinite(val_loss):
            raise TrainingDiverged(epoch)
        stats = EpochStats(epoch, train_loss, val_loss)
        if accuracy_fn is not None:
            train_out, _ = forward(spec, params, inputs)
            stats.train_acc = accuracy_fn(train_out, targets)
            stats.val_acc = accuracy_fn(val_out, val_targets)
        history.append(stats)
        params.epochs_trained += 1
    return params, history


def make_optimizer(kind: str, learning_rate: float, momentum: float = 0.9) -> OptimizerState:
    return OptimizerState(kind=kind, learning_rate=learning_rate, momentum=momentum)


def write_history_csv(history: History, path: str | Path) -> None:
    """epoch,train_loss,val_loss,train_acc,val_acc (accuracies may be blank)."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss", "train_acc", "val_acc"])
        for row in history:
            w.writerow(
                [
                    row.epoch,
                    repr(row.train_loss),
                    repr(row.val_loss),
                    "" if row.train_acc is None else repr(row.train_acc),
                    "" if row.val_acc is None else repr(row.val_acc),
                ]
            )
