"""Central finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

import numpy as np

from .losses import attach_loss, loss
from .network import NetworkSpec, ParameterSet, backward, forward


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(1e-12, abs(analytic) + abs(numeric))


def grad_check(
    spec: NetworkSpec,
    params: ParameterSet,
    batch: np.ndarray,
    target: np.ndarray,
    loss_kind: str,
    step: float = 1e-6,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Perturbs every weight and bias entry by +-step; a spec with no
    parameters returns 0.0 (empty max).
    """
    if step <= 0:
        raise ValueError("step must be positive")
    out, tape = forward(spec, params, batch)
    attach_loss(tape, loss_kind, target)
    grads = backward(tape)

    worst = 0.0
    for i in sorted(params.weights):
        for store, g in ((params.weights, grads[i][0]), (params.biases, grads[i][1])):
            arr = store[i]
            flat = arr.ravel()
            gflat = g.ravel()
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + step
                up = loss(loss_kind, forward(spec, params, batch)[0], target)
                flat[j] = orig - step
                down = loss(loss_kind, forward(spec, params, batch)[0], target)
                flat[j] = orig
                numeric = (up - down) / (2.0 * step)
                worst = max(worst, relative_error(float(gflat[j]), numeric))
    return worst
