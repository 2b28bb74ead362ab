"""Reverse-mode automatic differentiation over float64 numpy arrays.

A :class:`Var` is a node in a computation graph: a leaf (parameter, input,
or constant) or the result of an op.  Ops record a vector-Jacobian product
closure for the backward sweep and a recompute closure so a finished graph
can be replayed forward and must reproduce its value bit-for-bit.

Only the ops this package needs are provided: dense-layer arithmetic,
the activation/loss primitives, and a uniform-window mean used by the
structural-similarity objective (the one op whose input gradient the
boundary generator differentiates through).
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


class TapeError(Exception):
    """Backward requested on a graph that does not end in a finite scalar."""


def _as_array(value) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    return arr


class Var:
    __slots__ = ("value", "parents", "_vjp", "_recompute", "grad")

    def __init__(
        self,
        value,
        parents: tuple["Var", ...] = (),
        vjp: Callable[[np.ndarray], Sequence[np.ndarray]] | None = None,
        recompute: Callable[..., np.ndarray] | None = None,
    ):
        self.value = _as_array(value)
        self.parents = parents
        self._vjp = vjp
        self._recompute = recompute
        self.grad: np.ndarray | None = None

    # -- operator sugar ------------------------------------------------
    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __rtruediv__(self, other):
        return div(_lift(other), self)

    def __matmul__(self, other):
        return matmul(self, _lift(other))

    def __neg__(self):
        return neg(self)

    def __repr__(self):
        return f"Var(shape={self.value.shape}, leaf={not self.parents})"


def _lift(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum grad over axes that were broadcast to reach its shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# -- graph traversal ----------------------------------------------------


def topo_order(root: Var) -> list[Var]:
    """Parents-before-children order, iterative to spare the stack."""
    order: list[Var] = []
    seen: set[int] = set()
    stack: list[tuple[Var, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(root: Var) -> None:
    """Populate .grad on every node reachable from a scalar root."""
    if root.value.shape != ():
        raise TapeError(f"backward root must be scalar, got shape {root.value.shape}")
    if not np.isfinite(root.value):
        raise TapeError("backward root is not finite")
    order = topo_order(root)
    for node in order:
        node.grad = None
    root.grad = np.ones((), dtype=np.float64)
    for node in reversed(order):
        if node.grad is None or node._vjp is None:
            continue
        for parent, pgrad in zip(node.parents, node._vjp(node.grad)):
            if pgrad is None:
                continue
            if parent.grad is None:
                parent.grad = pgrad
            else:
                parent.grad = parent.grad + pgrad


def replay(root: Var) -> np.ndarray:
    """Re-run every recorded op from the leaves; returns the recomputed root.

    Values are recomputed in place, so the graph must reproduce itself
    exactly (it does: every op is a deterministic function of its parents).
    """
    for node in topo_order(root):
        if node._recompute is not None:
            node.value = node._recompute(*(p.value for p in node.parents))
    return root.value


# -- arithmetic ops ------------------------------------------------------


def add(a: Var, b: Var) -> Var:
    def vjp(g):
        return _unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape)

    return Var(a.value + b.value, (a, b), vjp, lambda av, bv: av + bv)


def sub(a: Var, b: Var) -> Var:
    def vjp(g):
        return _unbroadcast(g, a.value.shape), _unbroadcast(-g, b.value.shape)

    return Var(a.value - b.value, (a, b), vjp, lambda av, bv: av - bv)


def neg(a: Var) -> Var:
    return Var(-a.value, (a,), lambda g: (-g,), lambda av: -av)


def mul(a: Var, b: Var) -> Var:
    def vjp(g):
        return (
            _unbroadcast(g * b.value, a.value.shape),
            _unbroadcast(g * a.value, b.value.shape),
        )

    return Var(a.value * b.value, (a, b), vjp, lambda av, bv: av * bv)


def div(a: Var, b: Var) -> Var:
    def vjp(g):
        return (
            _unbroadcast(g / b.value, a.value.shape),
            _unbroadcast(-g * a.value / (b.value * b.value), b.value.shape),
        )

    return Var(a.value / b.value, (a, b), vjp, lambda av, bv: av / bv)


def matmul(a: Var, b: Var) -> Var:
    def vjp(g):
        return g @ b.value.T, a.value.T @ g

    return Var(a.value @ b.value, (a, b), vjp, lambda av, bv: av @ bv)


def square(a: Var) -> Var:
    return Var(
        a.value * a.value, (a,), lambda g: (g * (2.0 * a.value),), lambda av: av * av
    )


# -- activations and elementwise functions -------------------------------


def relu(a: Var) -> Var:
    out = np.maximum(a.value, 0.0)
    mask = (a.value > 0.0).astype(np.float64)
    return Var(out, (a,), lambda g: (g * mask,), lambda av: np.maximum(av, 0.0))


def sigmoid(a: Var) -> Var:
    out = 1.0 / (1.0 + np.exp(-a.value))

    def vjp(g):
        return (g * out * (1.0 - out),)

    return Var(out, (a,), vjp, lambda av: 1.0 / (1.0 + np.exp(-av)))


def tanh(a: Var) -> Var:
    out = np.tanh(a.value)
    return Var(out, (a,), lambda g: (g * (1.0 - out * out),), np.tanh)


def exp(a: Var) -> Var:
    out = np.exp(a.value)
    return Var(out, (a,), lambda g: (g * out,), np.exp)


def log(a: Var) -> Var:
    return Var(np.log(a.value), (a,), lambda g: (g / a.value,), np.log)


def clip_min(a: Var, lo: float) -> Var:
    """max(a, lo); gradient passes where a > lo (used for log clamping)."""
    mask = (a.value > lo).astype(np.float64)
    return Var(
        np.maximum(a.value, lo), (a,), lambda g: (g * mask,), lambda av: np.maximum(av, lo)
    )


def softmax_rows(a: Var) -> Var:
    """Numerically stable softmax along the last axis of a 2-D batch."""
    shifted = a.value - a.value.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=1, keepdims=True)

    def vjp(g):
        inner = (g * out).sum(axis=1, keepdims=True)
        return (out * (g - inner),)

    def recompute(av):
        ee = np.exp(av - av.max(axis=1, keepdims=True))
        return ee / ee.sum(axis=1, keepdims=True)

    return Var(out, (a,), vjp, recompute)


# -- reductions and shape ops --------------------------------------------


def sum_all(a: Var) -> Var:
    def vjp(g):
        return (np.broadcast_to(g, a.value.shape).astype(np.float64, copy=True),)

    return Var(a.value.sum(), (a,), vjp, lambda av: av.sum())


def mean_all(a: Var) -> Var:
    n = a.value.size

    def vjp(g):
        return (np.full(a.value.shape, float(g) / n),)

    return Var(a.value.mean(), (a,), vjp, lambda av: av.mean())


def reshape(a: Var, shape: tuple[int, ...]) -> Var:
    old = a.value.shape
    return Var(
        a.value.reshape(shape),
        (a,),
        lambda g: (g.reshape(old),),
        lambda av: av.reshape(shape),
    )


def window_mean(a: Var, index: np.ndarray) -> Var:
    """Mean over gathered windows.

    ``index`` has shape (n_windows, window_size) and holds flat indices into
    ``a`` (any shape; it is raveled).  Output is 1-D of length n_windows.
    The backward pass scatter-adds grad/window_size back onto the input.
    """
    size = index.shape[1]

    def fwd(av):
        return av.ravel()[index].mean(axis=1)

    def vjp(g):
        out = np.zeros(a.value.size, dtype=np.float64)
        np.add.at(out, index.ravel(), np.repeat(g / size, size))
        return (out.reshape(a.value.shape),)

    return Var(fwd(a.value), (a,), vjp, fwd)
