import numpy as np
import pytest

from nnwatchdog import nn
from nnwatchdog.rng import Rng


def test_identity_reshape_spec_returns_batch():
    spec = nn.NetworkSpec((nn.Reshape((4, 4)),))
    batch = Rng(1).uniform(0, 1, (3, 4, 4))
    out, _ = nn.forward(spec, nn.ParameterSet({}, {}), batch)
    assert np.array_equal(out, batch)


def test_dense_identity_weights():
    spec = nn.NetworkSpec((nn.Dense(2, 2),))
    params = nn.ParameterSet({0: np.eye(2)}, {0: np.zeros(2)})
    out, _ = nn.forward(spec, params, np.array([3.0, 4.0]))
    assert np.array_equal(out, [[3.0, 4.0]])


def test_dense_direct_substitution():
    spec = nn.NetworkSpec((nn.Dense(2, 1),))
    params = nn.ParameterSet({0: np.array([[2.0], [3.0]])}, {0: np.array([1.0])})
    out, _ = nn.forward(spec, params, np.array([1.0, 1.0]))
    assert out[0, 0] == 6.0


def test_forward_is_pure():
    spec = nn.dense_stack([6, 4, 3], "tanh", "softmax")
    params = nn.init_params(spec, 3)
    batch = Rng(4).uniform(0, 1, (5, 6))
    a, _ = nn.forward(spec, params, batch)
    b, _ = nn.forward(spec, params, batch)
    assert np.array_equal(a, b)


def test_shape_error_names_layer():
    spec = nn.NetworkSpec((nn.Dense(4, 2), nn.Activation("relu"), nn.Dense(2, 1)))
    params = nn.init_params(spec, 0)
    with pytest.raises(nn.ShapeError) as err:
        nn.forward(spec, params, np.ones((2, 5)))
    assert err.value.layer_index == 0

    bad = nn.init_params(spec, 0)
    bad.weights[2] = np.zeros((3, 1))
    with pytest.raises(nn.ShapeError) as err:
        nn.forward(spec, bad, np.ones((2, 4)))
    assert err.value.layer_index == 2


def test_spec_validation():
    with pytest.raises(nn.SpecError):
        nn.NetworkSpec((nn.Dense(4, 2), nn.Dense(3, 1)))  # size mismatch
    with pytest.raises(nn.SpecError):
        nn.NetworkSpec((nn.Softmax(), nn.Dense(2, 2)))  # softmax not last
    with pytest.raises(nn.SpecError):
        nn.NetworkSpec((nn.Activation("gelu"),))  # unknown activation


def test_softmax_rows_normalized():
    spec = nn.dense_stack([5, 4], "relu", "softmax")
    params = nn.init_params(spec, 7)
    out, _ = nn.forward(spec, params, Rng(8).uniform(-2, 2, (6, 5)))
    assert out.min() >= 0
    assert np.abs(out.sum(axis=1) - 1.0).max() < 1e-12


def test_backward_chain_rule_by_hand():
    # loss = mse(dense(1,1,w=2,b=0)(x), 0) at x=3: dL/dw = 2*(2*3)*3 = 36
    spec = nn.NetworkSpec((nn.Dense(1, 1),))
    params = nn.ParameterSet({0: np.array([[2.0]])}, {0: np.array([0.0])})
    out, tape = nn.forward(spec, params, np.array([[3.0]]))
    nn.attach_loss(tape, "mse", np.array([[0.0]]))
    grads = nn.backward(tape)
    assert grads[0][0][0, 0] == 36.0


def test_constant_network_zero_gradients():
    # parameters exist but the loss does not depend on them (relu dead zone)
    spec = nn.NetworkSpec((nn.Dense(2, 2), nn.Activation("relu")))
    params = nn.ParameterSet(
        {0: np.array([[-1.0, -2.0], [-3.0, -4.0]])}, {0: np.array([-1.0, -1.0])}
    )
    out, tape = nn.forward(spec, params, np.array([[1.0, 1.0]]))
    assert np.array_equal(out, [[0.0, 0.0]])
    nn.attach_loss(tape, "mse", np.array([[0.0, 0.0]]))
    grads = nn.backward(tape)
    assert np.array_equal(grads[0][0], np.zeros((2, 2)))
    assert np.array_equal(grads[0][1], np.zeros(2))


def test_backward_matches_finite_differences_random_net():
    spec = nn.dense_stack([5, 4, 3], "relu", None)
    params = nn.init_params(spec, 21)
    batch = Rng(22).uniform(-1, 1, (4, 5))
    target = Rng(23).uniform(0, 1, (4, 3))
    err = nn.grad_check(spec, params, batch, target, "mse")
    assert err < 1e-6


def test_grad_check_linear_model_tight():
    spec = nn.NetworkSpec((nn.Dense(3, 2),))
    params = nn.init_params(spec, 4)
    batch = Rng(5).uniform(-1, 1, (4, 3))
    target = Rng(6).uniform(-1, 1, (4, 2))
    assert nn.grad_check(spec, params, batch, target, "mse") < 1e-9


def test_grad_check_zero_parameter_spec_is_zero():
    spec = nn.NetworkSpec((nn.Reshape((4,)),))
    params = nn.ParameterSet({}, {})
    batch = Rng(7).uniform(0, 1, (2, 4))
    assert nn.grad_check(spec, params, batch, batch, "mse") == 0.0


def test_tape_replay_matches_recorded_loss():
    spec = nn.dense_stack([4, 3, 2], "sigmoid", None)
    params = nn.init_params(spec, 2)
    out, tape = nn.forward(spec, params, Rng(1).uniform(0, 1, (3, 4)))
    recorded = nn.attach_loss(tape, "mse", np.zeros((3, 2)))
    assert tape.replay() == recorded


def test_backward_without_loss_raises():
    spec = nn.NetworkSpec((nn.Dense(2, 1),))
    params = nn.init_params(spec, 0)
    _, tape = nn.forward(spec, params, np.ones((1, 2)))
    with pytest.raises(nn.TapeError):
        nn.backward(tape)


def test_input_gradient_returned_when_requested():
    spec = nn.NetworkSpec((nn.Dense(2, 1),))
    params = nn.ParameterSet({0: np.array([[2.0], [3.0]])}, {0: np.array([0.0])})
    out, tape = nn.forward(spec, params, np.array([[1.0, 1.0]]))
    nn.attach_loss(tape, "mse", np.array([[0.0]]))
    grads, gx = nn.backward(tape, want_input_grad=True)
    # d/dx of (2x0+3x1)^2 / 1 at (1,1): 2*5*[2,3]
    assert np.allclose(gx, [[20.0, 30.0]])


def test_canonical_text_round_trip():
    spec = nn.dense_stack([9, 4, 2], "relu", "softmax")
    text = nn.network.spec_to_text(spec, seed=42, epochs=7)
    back, seed, epochs = nn.network.spec_from_text(text)
    assert back == spec and seed == 42 and epochs == 7


def test_spec_io_sizes():
    spec = nn.dense_stack([1024, 256, 64, 256, 1024], "relu", "sigmoid")
    assert spec.input_size == 1024
    assert spec.output_size == 1024
