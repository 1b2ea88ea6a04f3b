import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aimkit.errors import ContractViolation
from aimkit.nn import (AdamState, DenseLayer, adam_step, bce_logits, bce_loss, finite_diff_check, init_dense,
                       load_params, mlp_backward, mlp_forward, mse_loss, save_params)


def test_forward_basics():
    eye = DenseLayer(np.eye(3), np.zeros(3), "linear")
    x = np.array([0.3, -1.0, 2.0])
    np.testing.assert_array_equal(mlp_forward([eye], x)[0], x)
    relu = DenseLayer(np.eye(2), np.zeros(2), "relu")
    np.testing.assert_array_equal(mlp_forward([relu], np.array([-1.0, 2.0]))[0], [0.0, 2.0])
    sig = DenseLayer(np.eye(1), np.zeros(1), "sigmoid")
    assert mlp_forward([sig], np.zeros(1))[0][0] == 0.5


def test_shape_mismatch_and_stale_cache():
    rng = np.random.default_rng(0)
    a, b = init_dense(rng, 3, 2), init_dense(rng, 3, 2)
    with pytest.raises(ContractViolation):
        mlp_forward([a], np.ones(4))
    _, cache = mlp_forward([a], np.ones(3))
    with pytest.raises(ContractViolation):
        mlp_backward([b], cache, np.ones(2))


def test_linear_layer_gradient_is_outer_product():
    rng = np.random.default_rng(1)
    layer = DenseLayer(rng.normal(size=(2, 3)), rng.normal(size=2), "linear")
    x, g = rng.normal(size=3), rng.normal(size=2)
    _, cache = mlp_forward([layer], x)
    [(dW, db)], dx = mlp_backward([layer], cache, g)
    np.testing.assert_allclose(dW, np.outer(g, x))
    np.testing.assert_allclose(db, g)
    np.testing.assert_allclose(dx, layer.weights.T @ g)


def test_relu_blocks_gradient_at_negative_preactivation():
    layer = DenseLayer(np.array([[1.0], [-1.0]]), np.zeros(2), "relu")
    _, cache = mlp_forward([layer], np.array([2.0]))
    [(dW, db)], _ = mlp_backward([layer], cache, np.ones(2))
    assert dW[1, 0] == 0.0 and db[1] == 0.0
    assert dW[0, 0] == 2.0


@given(st.integers(0, 2**31), st.sampled_from(["linear", "sigmoid"]), st.integers(1, 4))
def test_two_layer_net_matches_finite_differences(seed, out_act, batch):
    rng = np.random.default_rng(seed)
    layers = [init_dense(rng, 4, 5, "relu"), init_dense(rng, 5, 3, out_act)]
    for l in layers:
        l.bias[:] = rng.normal(scale=0.1, size=l.bias.shape)
    x = rng.normal(size=(batch, 4))
    target = rng.normal(size=(batch, 3))

    def loss_and_grad():
        y, cache = mlp_forward(layers, x)
        loss, g = mse_loss(y, target)
        grads, _ = mlp_backward(layers, cache, g)
        return loss, [t for pair in grads for t in pair]

    params = [t for l in layers for t in (l.weights, l.bias)]
    report = finite_diff_check(loss_and_grad, params)
    assert report.passed, report.per_param


def test_gradient_checker_flags_wrong_gradients():
    w = np.array([1.5, -0.5])
    report = finite_diff_check(lambda: (float(np.sum(w ** 2)), [w.copy()]), [w])
    assert not report.passed and report.max_rel_error > 0.4


# ---- Adam -----------------------------------------------------------------------------------

def test_adam_first_step():
    p = np.array([0.0])
    state = AdamState.for_params([p], lr=0.001)
    adam_step([p], [np.array([1.0])], state)
    assert p[0] == pytest.approx(-0.001 / (1 + 1e-8), rel=1e-12)
    assert state.step_count == 1


def test_adam_zero_gradient_leaves_params():
    p = np.array([[0.3, -0.2]])
    state = AdamState.for_params([p], lr=0.01)
    for _ in range(3):
        adam_step([p], [np.zeros_like(p)], state)
    np.testing.assert_array_equal(p, [[0.3, -0.2]])


def test_adam_sign_flip_shrinks_step():
    p = np.array([0.0])
    state = AdamState.for_params([p], lr=0.001)
    adam_step([p], [np.array([1.0])], state)
    first = p[0]
    adam_step([p], [np.array([-1.0])], state)
    second = p[0] - first
    # by hand: m2 = 0.09 - 0.1, m_hat = -0.01 / 0.19; v2 = 0.000999 + 0.001, v_hat = 1
    assert second == pytest.approx(0.001 * (0.01 / 0.19) / (1 + 1e-8), rel=1e-9)
    assert abs(second) < abs(first)


# ---- losses ---------------------------------------------------------------------------------

def test_loss_values():
    loss, grad = mse_loss(np.array([1.0, 2.0]), np.array([1.0, 2.0]))
    assert loss == 0.0 and not grad.any()
    assert bce_loss(np.array([0.5]), np.array([1.0]))[0] == pytest.approx(math.log(2), abs=1e-15)


@given(st.integers(0, 2**31), st.floats(1.0, 5.0))
def test_bce_gradients(seed, pos_weight):
    rng = np.random.default_rng(seed)
    p = rng.uniform(0.05, 0.95, 6)
    y = (rng.random(6) < 0.5).astype(float)
    z = rng.normal(size=6)
    for fn, x in ((bce_loss, p), (bce_logits, z)):
        def loss_and_grad():
            loss, grad = fn(x, y, pos_weight)
            return loss, [grad]
        assert finite_diff_check(loss_and_grad, [x]).passed
    sig = 1 / (1 + np.exp(-z))
    assert bce_logits(z, y, pos_weight)[0] == pytest.approx(bce_loss(sig, y, pos_weight)[0], rel=1e-10)


# ---- checkpoints ----------------------------------------------------------------------------

def test_param_file_round_trip_is_exact_and_deterministic(tmp_path):
    rng = np.random.default_rng(3)
    tensors = {"a": rng.normal(size=(3, 4)), "b": rng.normal(size=5), "c": np.arange(4)}
    save_params(tmp_path / "x.bin", tensors, {"kind": "test"})
    save_params(tmp_path / "y.bin", tensors, {"kind": "test"})
    assert (tmp_path / "x.bin").read_bytes() == (tmp_path / "y.bin").read_bytes()
    back, meta = load_params(tmp_path / "x.bin")
    assert meta == {"kind": "test"}
    for k, v in tensors.items():
        np.testing.assert_array_equal(back[k], v)
        assert back[k].shape == v.shape
