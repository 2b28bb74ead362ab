import math

import numpy as np
import pytest

from nnwatchdog import nn
from nnwatchdog.nn.losses import LossError
from nnwatchdog.nn.optim import GradientError
from nnwatchdog.rng import Rng


def test_mse_identical_inputs_zero():
    x = Rng(1).uniform(0, 1, (4, 3))
    assert nn.loss("mse", x, x) == 0.0


def test_categorical_uniform_is_log_k():
    pred = np.full((1, 4), 0.25)
    assert math.isclose(
        nn.loss("categorical-cross-entropy", pred, np.array([2])), math.log(4),
        rel_tol=1e-12,
    )


def test_binary_half_is_log_two():
    assert math.isclose(
        nn.loss("binary-cross-entropy", np.array([[0.5]]), np.array([[1.0]])),
        math.log(2),
        rel_tol=1e-12,
    )


def test_cross_entropy_clamps_saturated_probabilities():
    pred = np.array([[1.0, 0.0]])
    val = nn.loss("categorical-cross-entropy", pred, np.array([1]))
    assert np.isfinite(val)
    assert val == pytest.approx(-math.log(1e-12), rel=1e-6)


def test_loss_shape_mismatch():
    with pytest.raises(LossError):
        nn.loss("mse", np.ones((2, 2)), np.ones((3, 3)))
    with pytest.raises(LossError):
        nn.loss("categorical-cross-entropy", np.full((2, 3), 1 / 3), np.array([3, 0]))


def test_loss_rejects_non_finite_prediction():
    with pytest.raises(LossError):
        nn.loss("mse", np.array([[np.nan]]), np.array([[0.0]]))


def test_losses_nonnegative():
    rng = Rng(2)
    for _ in range(20):
        pred = rng.uniform(0.05, 0.95, (3, 4))
        pred = pred / pred.sum(axis=1, keepdims=True)
        target = np.array([0, 1, 2])
        assert nn.loss("categorical-cross-entropy", pred, target) >= 0.0
        assert nn.loss("mse", pred, rng.uniform(0, 1, (3, 4))) >= 0.0


# -- optimizer ---------------------------------------------------------------


def _single_param(value):
    return nn.ParameterSet({0: np.array([[value]])}, {0: np.array([0.0])})


def test_sgd_no_momentum_direct_substitution():
    params = _single_param(1.0)
    state = nn.OptimizerState("sgd-momentum", learning_rate=0.1, momentum=0.0)
    nn.optimizer_step(state, params, {0: (np.array([[2.0]]), np.array([0.0]))})
    assert params.weights[0][0, 0] == pytest.approx(0.8, abs=1e-15)


def test_sgd_momentum_accumulates_velocity():
    params = _single_param(0.0)
    state = nn.OptimizerState("sgd-momentum", learning_rate=0.1, momentum=0.5)
    g = {0: (np.array([[1.0]]), np.array([0.0]))}
    nn.optimizer_step(state, params, g)  # v=-0.1, p=-0.1
    nn.optimizer_step(state, params, g)  # v=-0.15, p=-0.25
    assert params.weights[0][0, 0] == pytest.approx(-0.25, abs=1e-15)


def test_zero_gradients_leave_params_unchanged():
    for kind in ("sgd-momentum", "adam"):
        params = _single_param(1.5)
        state = nn.OptimizerState(kind, learning_rate=0.1, momentum=0.0)
        nn.optimizer_step(state, params, {0: (np.zeros((1, 1)), np.zeros(1))})
        assert params.weights[0][0, 0] == 1.5


def test_adam_first_step_magnitude():
    params = _single_param(1.0)
    state = nn.OptimizerState("adam", learning_rate=0.001)
    nn.optimizer_step(state, params, {0: (np.array([[1.0]]), np.array([0.0]))})
    # bias-corrected first step moves by ~lr regardless of gradient scale
    assert params.weights[0][0, 0] == pytest.approx(1.0 - 0.001, abs=1e-9)


def test_non_finite_gradient_names_parameter():
    params = _single_param(1.0)
    state = nn.OptimizerState("adam")
    with pytest.raises(GradientError) as err:
        nn.optimizer_step(state, params, {0: (np.array([[np.inf]]), np.array([0.0]))})
    assert err.value.key == "0.w"


def test_optimizer_step_deterministic():
    def run():
        params = nn.init_params(nn.dense_stack([4, 3], "relu", None), 5)
        state = nn.OptimizerState("adam", learning_rate=0.01)
        g = {0: (np.full((4, 3), 0.3), np.full(3, -0.2))}
        for _ in range(5):
            nn.optimizer_step(state, params, g)
        return params.weights[0].copy()

    assert np.array_equal(run(), run())
