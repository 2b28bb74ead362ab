"""Parameter update rules: SGD with momentum, and Adam.

Updates are deterministic functions of (state, params, grads).  sgd-momentum:
v <- mu*v - lr*g, p <- p + v.  Adam keeps bias-corrected first and second
moments per parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import Gradients, ParameterSet


class GradientError(Exception):
    """Non-finite gradient; carries the offending parameter key."""

    def __init__(self, key: str):
        self.key = key
        super().__init__(f"non-finite gradient for parameter {key}")


@dataclass
class OptimizerState:
    kind: str  # "sgd-momentum" | "adam"
    learning_rate: float = 0.001
    momentum: float = 0.9  # mu for sgd, beta1 for adam
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    slot1: dict[str, np.ndarray] = field(default_factory=dict)  # velocity / m
    slot2: dict[str, np.ndarray] = field(default_factory=dict)  # adam v

    def __post_init__(self):
        if self.kind not in ("sgd-momentum", "adam"):
            raise ValueError(f"unknown optimizer kind {self.kind!r}")


def _entries(params: ParameterSet, grads: Gradients):
    for i in sorted(params.weights):
        yield f"{i}.w", params.weights, i, grads[i][0]
        yield f"{i}.b", params.biases, i, grads[i][1]


def optimizer_step(
    state: OptimizerState, params: ParameterSet, grads: Gradients
) -> ParameterSet:
    """Apply one update in place; returns params for convenience."""
    for key, store, i, g in _entries(params, grads):
        if not np.all(np.isfinite(g)):
            raise GradientError(key)
        if g.shape != store[i].shape:
            raise GradientError(key)
    state.step_count += 1
    lr = state.learning_rate
    if state.kind == "sgd-momentum":
        mu = state.momentum
        for key, store, i, g in _entries(params, grads):
            v = state.slot1.get(key)
            if v is None:
                v = np.zeros_like(store[i])
            v = mu * v - lr * g
            state.slot1[key] = v
            store[i] = store[i] + v
    else:  # adam
        b1, b2, eps, t = state.momentum, state.beta2, state.epsilon, state.step_count
        for key, store, i, g in _entries(params, grads):
            m = state.slot1.get(key)
            v = state.slot2.get(key)
            if m is None:
                m = np.zeros_like(store[i])
                v = np.zeros_like(store[i])
            m = b1 * m + (1.0 - b1) * g
            v = b2 * v + (1.0 - b2) * (g * g)
            state.slot1[key] = m
            state.slot2[key] = v
            m_hat = m / (1.0 - b1**t)
            v_hat = v / (1.0 - b2**t)
            store[i] = store[i] - lr * m_hat / (np.sqrt(v_hat) + eps)
    return params
