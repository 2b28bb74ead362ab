import numpy as np
import pytest

from nnwatchdog.nn import autodiff as ad
from nnwatchdog.nn.autodiff import Var
from nnwatchdog.rng import Rng


def numeric_grad(fn, x, eps=1e-6):
    """Central differences of a scalar fn at every entry of x."""
    g = np.zeros_like(x)
    flat = x.ravel()
    gf = g.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        up = fn(x)
        flat[i] = orig - eps
        down = fn(x)
        flat[i] = orig
        gf[i] = (up - down) / (2 * eps)
    return g


def rel_err(a, b):
    return np.abs(a - b) / np.maximum(1e-12, np.abs(a) + np.abs(b))


OPS = {
    "add": lambda vx, c: ad.sum_all(vx + Var(c)),
    "sub": lambda vx, c: ad.sum_all(ad.square(vx - Var(c))),
    "mul": lambda vx, c: ad.sum_all(vx * Var(c) * vx),
    "div": lambda vx, c: ad.sum_all(vx / Var(np.abs(c) + 1.0)),
    "matmul": lambda vx, c: ad.sum_all(ad.square(vx @ Var(c.T))),
    "relu": lambda vx, c: ad.sum_all(ad.relu(vx)),
    "sigmoid": lambda vx, c: ad.sum_all(ad.sigmoid(vx)),
    "tanh": lambda vx, c: ad.sum_all(ad.tanh(vx)),
    "exp": lambda vx, c: ad.sum_all(ad.exp(vx)),
    "neg": lambda vx, c: ad.sum_all(ad.square(-vx + Var(c))),
    "mean": lambda vx, c: ad.mean_all(ad.square(vx)),
    "softmax": lambda vx, c: ad.sum_all(
        ad.square(ad.softmax_rows(vx) - Var(np.abs(c)))
    ),
}


@pytest.mark.parametrize("name", sorted(OPS))
def test_op_gradients_match_finite_differences(name):
    rng = Rng(sum(map(ord, name)))
    x = rng.uniform(-1.5, 1.5, (4, 5))
    c = rng.uniform(-1.0, 1.0, (4, 5))
    build = OPS[name]

    leaf = Var(x.copy())
    ad.backward(build(leaf, c))

    def value(arr):
        return float(build(Var(arr), c).value)

    numeric = numeric_grad(value, x.copy())
    assert rel_err(leaf.grad, numeric).max() < 1e-6


def test_log_gradient():
    rng = Rng(3)
    x = rng.uniform(0.2, 2.0, (3, 3))
    leaf = Var(x.copy())
    ad.backward(ad.sum_all(ad.log(leaf)))
    numeric = numeric_grad(lambda a: float(np.log(a).sum()), x.copy())
    assert rel_err(leaf.grad, numeric).max() < 1e-6


def test_broadcast_add_bias_gradient():
    rng = Rng(5)
    x = rng.uniform(-1, 1, (6, 3))
    b = rng.uniform(-1, 1, (3,))
    vb = Var(b)
    ad.backward(ad.sum_all(ad.square(Var(x) + vb)))

    def value(bb):
        return float(ad.sum_all(ad.square(Var(x) + Var(bb))).value)

    numeric = numeric_grad(value, b.copy())
    assert rel_err(vb.grad, numeric).max() < 1e-6


def test_window_mean_forward_and_gradient():
    rng = Rng(9)
    x = rng.uniform(0, 1, (6, 6))
    idx = np.array([[0, 1, 6, 7], [14, 15, 20, 21]])
    expected = x.ravel()[idx].mean(axis=1)
    assert np.allclose(ad.window_mean(Var(x), idx).value, expected)

    vx = Var(x.copy())
    ad.backward(ad.sum_all(ad.square(ad.window_mean(vx, idx))))

    def value(arr):
        return float(ad.sum_all(ad.square(ad.window_mean(Var(arr), idx))).value)

    numeric = numeric_grad(value, x.copy())
    assert rel_err(vx.grad, numeric).max() < 1e-6


def test_backward_requires_scalar_root():
    v = Var(np.ones((2, 2)))
    with pytest.raises(ad.TapeError):
        ad.backward(v + v)


def test_replay_reproduces_value_bitwise():
    rng = Rng(11)
    x = Var(rng.uniform(-1, 1, (3, 4)))
    w = Var(rng.uniform(-1, 1, (4, 2)))
    out = ad.mean_all(ad.square(ad.tanh(x @ w)))
    recorded = out.value.copy()
    assert ad.replay(out) == recorded


def test_grad_accumulates_over_shared_subgraph():
    x = Var(np.array([3.0]))
    y = x * x + x * x  # 2x^2, dy/dx = 4x = 12
    ad.backward(ad.sum_all(y))
    assert np.allclose(x.grad, [12.0])
