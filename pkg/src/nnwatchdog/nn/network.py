"""Feed-forward network description, initialization, and forward evaluation.

A network is an ordered list of layer descriptors (dense, activation,
softmax, reshape).  Dense layers own a weight matrix (fan_in, fan_out) and a
bias vector; evaluation is ``y = x @ W + b`` on a (batch, features) tensor.
Descriptors are validated on construction: adjacent sizes must agree and
softmax, if present, must be last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..rng import Rng
from . import autodiff as ad
from .autodiff import Var

ACTIVATIONS = ("relu", "sigmoid", "tanh")


class SpecError(Exception):
    """Invalid network description."""


class ShapeError(Exception):
    """Batch/parameter shape disagrees with the network description."""

    def __init__(self, layer_index: int, message: str):
        self.layer_index = layer_index
        super().__init__(f"layer {layer_index}: {message}")


@dataclass(frozen=True)
class Dense:
    in_size: int
    out_size: int


@dataclass(frozen=True)
class Activation:
    kind: str


@dataclass(frozen=True)
class Softmax:
    pass


@dataclass(frozen=True)
class Reshape:
    shape: tuple[int, ...]


Layer = Dense | Activation | Softmax | Reshape


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple[Layer, ...]

    def __post_init__(self):
        size: int | None = None
        for i, layer in enumerate(self.layers):
            if isinstance(layer, Dense):
                if layer.in_size <= 0 or layer.out_size <= 0:
                    raise SpecError(f"layer {i}: dense sizes must be positive")
                if size is not None and size != layer.in_size:
                    raise SpecError(
                        f"layer {i}: dense expects {layer.in_size} features, "
                        f"previous layer produces {size}"
                    )
                size = layer.out_size
            elif isinstance(layer, Activation):
                if layer.kind not in ACTIVATIONS:
                    raise SpecError(f"layer {i}: unknown activation {layer.kind!r}")
            elif isinstance(layer, Softmax):
                if i != len(self.layers) - 1:
                    raise SpecError(f"layer {i}: softmax must be the final layer")
            elif isinstance(layer, Reshape):
                new = int(np.prod(layer.shape))
                if size is not None and new != size:
                    raise SpecError(
                        f"layer {i}: reshape to {layer.shape} does not preserve "
                        f"{size} features"
                    )
                size = new
            else:
                raise SpecError(f"layer {i}: unknown layer {layer!r}")

    @property
    def input_size(self) -> int | None:
        """Flattened feature count the network expects; None if shape-free."""
        for layer in self.layers:
            if isinstance(layer, Dense):
                return layer.in_size
            if isinstance(layer, Reshape):
                return int(np.prod(layer.shape))
        return None

    @property
    def output_size(self) -> int | None:
        size = self.input_size
        for layer in self.layers:
            if isinstance(layer, Dense):
                size = layer.out_size
            elif isinstance(layer, Reshape):
                size = int(np.prod(layer.shape))
        return size

    def dense_indices(self) -> list[int]:
        return [i for i, l in enumerate(self.layers) if isinstance(l, Dense)]


def dense_stack(
    sizes: list[int], hidden_activation: str = "relu", output: str | None = None
) -> NetworkSpec:
    """Convenience builder: dense layers through `sizes` with activations.

    `output` is an activation name, "softmax", or None for raw output.
    """
    layers: list[Layer] = []
    for i in range(len(sizes) - 1):
        layers.append(Dense(sizes[i], sizes[i + 1]))
        if i < len(sizes) - 2:
            layers.append(Activation(hidden_activation))
    if output == "softmax":
        layers.append(Softmax())
    elif output is not None:
        layers.append(Activation(output))
    return NetworkSpec(tuple(layers))


@dataclass
class ParameterSet:
    """Weights/biases keyed by layer index, plus provenance metadata."""

    weights: dict[int, np.ndarray]
    biases: dict[int, np.ndarray]
    seed: int = 0
    epochs_trained: int = 0

    def copy(self) -> "ParameterSet":
        return ParameterSet(
            {k: v.copy() for k, v in self.weights.items()},
            {k: v.copy() for k, v in self.biases.items()},
            self.seed,
            self.epochs_trained,
        )

    def keys(self) -> list[int]:
        return sorted(self.weights)


@dataclass(frozen=True)
class Model:
    """A network description bundled with trained parameters."""

    spec: NetworkSpec
    params: ParameterSet


def init_params(spec: NetworkSpec, seed: int) -> ParameterSet:
    """Scaled-uniform init: W ~ U(+-sqrt(6/(fan_in+fan_out))), b = 0."""
    rng = Rng(seed)
    weights: dict[int, np.ndarray] = {}
    biases: dict[int, np.ndarray] = {}
    for i, layer in enumerate(spec.layers):
        if not isinstance(layer, Dense):
            continue
        bound = math.sqrt(6.0 / (layer.in_size + layer.out_size))
        stream = rng.spawn(i)
        weights[i] = stream.uniform(-bound, bound, (layer.in_size, layer.out_size))
        biases[i] = np.zeros(layer.out_size, dtype=np.float64)
    return ParameterSet(weights, biases, seed=seed)


def check_params(spec: NetworkSpec, params: ParameterSet) -> None:
    for i, layer in enumerate(spec.layers):
        if not isinstance(layer, Dense):
            continue
        expect_w = (layer.in_size, layer.out_size)
        if i not in params.weights:
            raise ShapeError(i, "missing weights")
        if params.weights[i].shape != expect_w:
            raise ShapeError(
                i, f"weights shape {params.weights[i].shape} != {expect_w}"
            )
        if params.biases[i].shape != (layer.out_size,):
            raise ShapeError(
                i, f"bias shape {params.biases[i].shape} != ({layer.out_size},)"
            )


@dataclass
class GradientTape:
    """Recorded forward computation; extended with a loss, then differentiated."""

    output: Var
    param_vars: dict[int, tuple[Var, Var]]
    input_var: Var
    loss_var: Var | None = None

    def recorded_loss(self) -> float:
        if self.loss_var is None:
            raise ad.TapeError("tape has no recorded loss")
        return float(self.loss_var.value)

    def replay(self) -> float:
        """Re-run the recorded graph; returns the recomputed loss value."""
        if self.loss_var is None:
            raise ad.TapeError("tape has no recorded loss")
        return float(ad.replay(self.loss_var))


def forward_vars(
    spec: NetworkSpec, param_vars: dict[int, tuple[Var, Var]], x: Var
) -> Var:
    """Forward pass over autodiff nodes; x is (batch, features)."""
    out = x
    for i, layer in enumerate(spec.layers):
        if isinstance(layer, Dense):
            if out.value.shape[1] != layer.in_size:
                raise ShapeError(
                    i, f"got {out.value.shape[1]} features, expected {layer.in_size}"
                )
            w, b = param_vars[i]
            out = out @ w + b
        elif isinstance(layer, Activation):
            out = {"relu": ad.relu, "sigmoid": ad.sigmoid, "tanh": ad.tanh}[
                layer.kind
            ](out)
        elif isinstance(layer, Softmax):
            out = ad.softmax_rows(out)
        elif isinstance(layer, Reshape):
            n = out.value.shape[0]
            flat = int(np.prod(layer.shape))
            if out.value[0].size != flat:
                raise ShapeError(
                    i, f"cannot reshape {out.value.shape[1:]} to {layer.shape}"
                )
            out = ad.reshape(out, (n, flat))
    return out


def forward(
    spec: NetworkSpec, params: ParameterSet, batch: np.ndarray
) -> tuple[np.ndarray, GradientTape]:
    """Evaluate the network on a (batch, ...) array.

    Returns the output values and the tape recording every intermediate,
    ready for a loss to be attached and differentiated.  Pure: identical
    inputs give bitwise-identical outputs.
    """
    check_params(spec, params)
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim == 1:
        batch = batch[None, :]
    flat = batch.reshape(batch.shape[0], -1)
    x = Var(flat)
    param_vars = {
        i: (Var(params.weights[i]), Var(params.biases[i]))
        for i in spec.dense_indices()
    }
    out = forward_vars(spec, param_vars, x)
    if not np.all(np.isfinite(out.value)):
        raise ShapeError(len(spec.layers) - 1, "non-finite values in network output")
    # Trailing reshape declares a per-sample output shape; everything else
    # flows as (batch, features).
    trailing: tuple[int, ...] | None = None
    for layer in spec.layers:
        if isinstance(layer, Reshape):
            trailing = layer.shape
        elif isinstance(layer, Dense):
            trailing = None
    value = out.value if trailing is None else out.value.reshape((flat.shape[0],) + trailing)
    return value, GradientTape(out, param_vars, x)


Gradients = dict[int, tuple[np.ndarray, np.ndarray]]


def backward(tape: GradientTape, want_input_grad: bool = False):
    """Differentiate the recorded loss w.r.t. every parameter.

    Returns gradients keyed like the ParameterSet: {layer: (dW, db)}.
    With want_input_grad, also returns d(loss)/d(input batch).
    """
    if tape.loss_var is None:
        raise ad.TapeError("tape not terminated in a scalar loss")
    ad.backward(tape.loss_var)
    grads: Gradients = {}
    for i, (w, b) in tape.param_vars.items():
        gw = w.grad if w.grad is not None else np.zeros_like(w.value)
        gb = b.grad if b.grad is not None else np.zeros_like(b.value)
        grads[i] = (gw, gb)
    if want_input_grad:
        gx = (
            tape.input_var.grad
            if tape.input_var.grad is not None
            else np.zeros_like(tape.input_var.value)
        )
        return grads, gx
    return grads


# -- canonical text form ---------------------------------------------------


def spec_to_text(spec: NetworkSpec, seed: int = 0, epochs: int = 0) -> str:
    """Canonical text: two metadata lines, then one line per layer."""
    lines = [f"seed {seed}", f"epochs {epochs}"]
    for layer in spec.layers:
        if isinstance(layer, Dense):
            lines.append(f"dense {layer.in_size} {layer.out_size}")
        elif isinstance(layer, Activation):
            lines.append(f"activation {layer.kind}")
        elif isinstance(layer, Softmax):
            lines.append("softmax")
        elif isinstance(layer, Reshape):
            lines.append("reshape " + " ".join(str(d) for d in layer.shape))
    return "\n".join(lines) + "\n"


def spec_from_text(text: str) -> tuple[NetworkSpec, int, int]:
    """Parse the canonical form; returns (spec, seed, epochs)."""
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if len(lines) < 2 or not lines[0].startswith("seed ") or not lines[1].startswith("epochs "):
        raise SpecError("canonical text must start with seed and epochs lines")
    seed = int(lines[0].split()[1])
    epochs = int(lines[1].split()[1])
    layers: list[Layer] = []
    for ln in lines[2:]:
        parts = ln.split()
        if parts[0] == "dense":
            layers.append(Dense(int(parts[1]), int(parts[2])))
        elif parts[0] == "activation":
            layers.append(Activation(parts[1]))
        elif parts[0] == "softmax":
            layers.append(Softmax())
        elif parts[0] == "reshape":
            layers.append(Reshape(tuple(int(d) for d in parts[1:])))
        else:
            raise SpecError(f"unknown layer line {ln!r}")
    return NetworkSpec(tuple(layers)), seed, epochs
