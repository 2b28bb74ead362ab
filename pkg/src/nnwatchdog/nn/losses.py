"""Training losses: mean squared error and the two cross-entropies.

Cross-entropies clamp probabilities into [EPS, 1 - EPS] before the log so a
saturated sigmoid/softmax cannot produce an infinite loss.  mse averages
over every element; both cross-entropies average over the batch.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Var
from .network import GradientTape

EPS = 1e-12

LOSS_KINDS = ("mse", "categorical-cross-entropy", "binary-cross-entropy")


class LossError(Exception):
    pass


def _one_hot(target: np.ndarray, k: int) -> np.ndarray:
    target = np.asarray(target)
    if target.ndim == 1:  # class indices
        if target.min() < 0 or target.max() >= k:
            raise LossError(f"class index out of range [0, {k})")
        out = np.zeros((target.size, k), dtype=np.float64)
        out[np.arange(target.size), target.astype(int)] = 1.0
        return out
    out = np.asarray(target, dtype=np.float64)
    rows = out.sum(axis=1)
    if not np.allclose(rows, 1.0) or out.min() < 0.0:
        raise LossError("targets are not valid one-hot rows")
    return out


def loss_var(kind: str, prediction: Var, target: np.ndarray) -> Var:
    """Build the scalar loss node on top of a prediction node."""
    pred_val = prediction.value
    if not np.all(np.isfinite(pred_val)):
        raise LossError("non-finite prediction")
    if kind == "mse":
        target = np.asarray(target, dtype=np.float64)
        if target.size != pred_val.size:
            raise LossError(
                f"target shape {target.shape} incompatible with prediction "
                f"shape {pred_val.shape}"
            )
        diff = prediction - Var(target.reshape(pred_val.shape))
        return ad.mean_all(ad.square(diff))
    if kind == "categorical-cross-entropy":
        if pred_val.ndim != 2:
            raise LossError("categorical cross-entropy expects (batch, classes)")
        onehot = _one_hot(target, pred_val.shape[1])
        if onehot.shape != pred_val.shape:
            raise LossError(
                f"target shape {onehot.shape} != prediction shape {pred_val.shape}"
            )
        n = pred_val.shape[0]
        logp = ad.log(_clamp(prediction))
        return ad.sum_all(Var(onehot) * logp) * (-1.0 / n)
    if kind == "binary-cross-entropy":
        target = np.asarray(target, dtype=np.float64).reshape(pred_val.shape)
        n = pred_val.size
        p = _clamp(prediction)
        terms = Var(target) * ad.log(p) + Var(1.0 - target) * ad.log(1.0 - p)
        return ad.sum_all(terms) * (-1.0 / n)
    raise LossError(f"unknown loss kind {kind!r}")


def _clamp(p: Var) -> Var:
    return ad.clip_min(-ad.clip_min(-p, -(1.0 - EPS)), EPS)


def loss(kind: str, prediction: np.ndarray, target: np.ndarray) -> float:
    """Scalar loss of a prediction array against a target."""
    value = loss_var(kind, Var(np.asarray(prediction, dtype=np.float64)), target)
    return float(value.value)


def attach_loss(tape: GradientTape, kind: str, target: np.ndarray) -> float:
    """Record a loss on a forward tape; returns its value."""
    tape.loss_var = loss_var(kind, tape.output, target)
    return float(tape.loss_var.value)
