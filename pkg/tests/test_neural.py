import copy

import numpy as np
import pytest

import oracles
from mmhate import neural
from mmhate.errors import DimensionError, ValidationError
from mmhate.neural import DenseLayer, OptimizerState, adam_step, backward, dense_layer, forward, he_init


def small_net(seed=0, sizes=(5, 7, 4, 1), activations=("relu", "relu", "sigmoid")):
    rng = np.random.SeedSequence(seed).generate_state(len(sizes) - 1)
    return [
        dense_layer(sizes[i], sizes[i + 1], activations[i], int(rng[i]))
        for i in range(len(sizes) - 1)
    ]


class TestHeInit:
    def test_target_std_values(self):
        # sqrt(2/2) = 1 and sqrt(2/8) = 0.5 are the construction targets
        assert np.sqrt(2 / 2) == 1.0
        assert np.sqrt(2 / 8) == 0.5
        w = he_init(2, 4, rng_seed=1)
        assert w.shape == (4, 2)

    def test_statistics_at_fan_in_50(self):
        w = he_init(50, 200, rng_seed=123)  # 10000 samples
        assert w.size == 10000
        assert abs(w.std() - 0.2) / 0.2 < 0.05
        assert abs(w.mean()) < 0.01

    def test_deterministic(self):
        assert np.array_equal(he_init(10, 10, rng_seed=7), he_init(10, 10, rng_seed=7))

    def test_zero_biases(self):
        layer = dense_layer(3, 4, "relu", 0)
        assert np.all(layer.biases == 0.0)


class TestForward:
    def test_identity_linear(self):
        layer = DenseLayer(np.eye(3), np.zeros(3), "linear")
        record = forward([layer], np.array([1.0, -2.0, 3.0]))
        assert np.array_equal(record.output[0], [1.0, -2.0, 3.0])

    def test_relu_clips_negatives(self):
        layer = DenseLayer(np.eye(2), np.zeros(2), "relu")
        record = forward([layer], np.array([-1.0, 2.0]))
        assert np.array_equal(record.output[0], [0.0, 2.0])

    def test_matches_hand_rolled_chain(self):
        layers = small_net(seed=5, activations=("relu", "relu", "linear"))
        rng = np.random.default_rng(2)
        x = rng.normal(size=(3, 5))
        record = forward(layers, x)
        expected = x
        for layer in layers:
            z = expected @ layer.weights.T + layer.biases
            expected = np.maximum(0, z) if layer.activation == "relu" else z
        assert np.allclose(record.output, expected, atol=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            forward(small_net(), np.zeros(3))

    def test_sigmoid_open_interval(self):
        layer = DenseLayer(np.array([[1.0]]), np.zeros(1), "sigmoid")
        for x in (-1e9, -50.0, 0.0, 50.0, 1e9):
            out = forward([layer], np.array([x])).output[0, 0]
            assert 0.0 < out < 1.0

    def test_relu_nonnegative(self):
        layers = small_net(activations=("relu", "relu", "relu"))
        rng = np.random.default_rng(0)
        record = forward(layers, rng.normal(size=(10, 5)))
        assert np.all(record.output >= 0)


class TestDropout:
    def test_mask_semantics(self):
        rng = np.random.default_rng(1)
        mask = neural.dropout_masks(rng, (1000,), 0.3)
        zeros = mask == 0.0
        survivors = mask[~zeros]
        assert np.allclose(survivors, 1 / 0.7)
        assert 0.2 < zeros.mean() < 0.4

    def test_forward_applies_mask_exactly(self):
        layer = DenseLayer(np.eye(4), np.zeros(4), "linear")
        mask = np.array([[0.0, 2.0, 2.0, 0.0]])
        record = forward([layer], np.ones((1, 4)), masks=[mask])
        assert np.array_equal(record.output, [[0.0, 2.0, 2.0, 0.0]])

    def test_inference_is_mask_free(self):
        layers = small_net()
        x = np.ones((2, 5))
        assert np.array_equal(forward(layers, x).output, forward(layers, x, masks=[None] * 3).output)


class TestBackward:
    def test_zero_gradient_zero_grads(self):
        layers = small_net()
        x = np.random.default_rng(0).normal(size=(4, 5))
        record = forward(layers, x)
        grads, _ = backward(layers, record, np.zeros_like(record.output))
        for dw, db in grads:
            assert np.all(dw == 0.0) and np.all(db == 0.0)

    def test_single_linear_neuron_chain_rule(self):
        layer = DenseLayer(np.array([[2.0]]), np.zeros(1), "linear")
        record = forward([layer], np.array([[3.0]]))
        grads, _ = backward([layer], record, np.array([[1.0]]))  # loss = y
        assert grads[0][0][0, 0] == 3.0
        assert grads[0][1][0] == 1.0

    def test_matches_finite_differences(self):
        layers = small_net(seed=9)
        rng = np.random.default_rng(4)
        x = rng.normal(size=(6, 5))
        y = rng.uniform(0.2, 0.8, size=(6, 1))

        def loss_fn():
            probs = forward(layers, x).output
            return neural.bce_loss(probs, y)[0]

        record = forward(layers, x)
        probs = record.output
        _, d_probs = neural.bce_loss(probs, y)
        grads, _ = backward(layers, record, d_probs)
        flat = neural.flatten_grads(grads)
        numeric = oracles.finite_difference_grads(loss_fn, neural.layer_params(layers))
        for a, n in zip(flat, numeric):
            denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-12)
            assert np.max(np.abs(a - n) / denom) < 1e-4

    def test_l2_term_added(self):
        layers = small_net(seed=2, activations=("relu", "relu", "linear"))
        x = np.random.default_rng(1).normal(size=(3, 5))
        record = forward(layers, x)
        zero_grad = np.zeros_like(record.output)
        grads, _ = backward(layers, record, zero_grad, l2_coefficient=0.5)
        for (dw, db), layer in zip(grads, layers):
            assert np.allclose(dw, 1.0 * layer.weights)  # 2 * 0.5 * W
            assert np.all(db == 0.0)  # biases not penalized


class TestAdam:
    def test_zero_gradients_no_change(self):
        params = [np.array([1.0, -2.0]), np.array([[3.0]])]
        state = neural.init_optimizer(params, learning_rate=0.01)
        before = [p.copy() for p in params]
        adam_step(state, params, [np.zeros(2), np.zeros((1, 1))])
        for b, p in zip(before, params):
            assert np.array_equal(b, p)

    def test_hand_computed_first_step(self):
        # m=0.1, v=0.001, bias-corrected to 1 and 1; delta = -lr/(1+eps)
        params = [np.array([0.0])]
        state = neural.init_optimizer(params, learning_rate=0.001)
        adam_step(state, params, [np.array([1.0])])
        expected = -0.001 * (1.0 / (1.0 + 1e-8))
        assert params[0][0] == pytest.approx(expected, abs=1e-15)

    def test_identical_states_identical_results(self):
        rng = np.random.default_rng(3)
        params_a = [rng.normal(size=(4, 3)), rng.normal(size=4)]
        grads = [rng.normal(size=(4, 3)), rng.normal(size=4)]
        params_b = [p.copy() for p in params_a]
        state_a = neural.init_optimizer(params_a, 0.01)
        state_b = neural.init_optimizer(params_b, 0.01)
        for _ in range(5):
            adam_step(state_a, params_a, grads)
            adam_step(state_b, params_b, grads)
        for a, b in zip(params_a, params_b):
            assert np.array_equal(a, b)

    def test_epoch_decay(self):
        params = [np.zeros(1)]
        state = neural.init_optimizer(params, 0.1, decay_rate=0.5)
        state.end_epoch()
        assert state.learning_rate == 0.05

    def test_l2_shrinks_weights(self):
        # with zero data gradient, an L2-driven step strictly shrinks every nonzero weight
        rng = np.random.default_rng(8)
        layers = [DenseLayer(rng.normal(size=(3, 3)), np.zeros(3), "linear")]
        x = np.zeros((1, 3))
        record = forward(layers, x)
        grads, _ = backward(layers, record, np.zeros((1, 3)), l2_coefficient=0.01)
        params = neural.layer_params(layers)
        before = layers[0].weights.copy()
        state = neural.init_optimizer(params, 1e-3)
        adam_step(state, params, neural.flatten_grads(grads))
        after = layers[0].weights
        nonzero = before != 0
        assert np.all(np.abs(after[nonzero]) < np.abs(before[nonzero]))


class TestGradCheck:
    def test_linear_mse_tight(self):
        layers = [dense_layer(4, 1, "linear", 3)]
        rng = np.random.default_rng(5)
        x = rng.normal(size=(8, 4))
        y = rng.normal(size=(8, 1))

        def loss_fn():
            return neural.mse_loss(forward(layers, x).output, y)[0]

        record = forward(layers, x)
        _, d_pred = neural.mse_loss(record.output, y)
        grads, _ = backward(layers, record, d_pred)
        err = neural.grad_check(neural.layer_params(layers), loss_fn, neural.flatten_grads(grads))
        assert err < 1e-7

    def test_relu_net_mse(self):
        layers = small_net(seed=11, activations=("relu", "relu", "linear"))
        rng = np.random.default_rng(6)
        x = rng.normal(size=(5, 5))
        y = rng.normal(size=(5, 1))

        def loss_fn():
            return neural.mse_loss(forward(layers, x).output, y)[0]

        record = forward(layers, x)
        _, d_pred = neural.mse_loss(record.output, y)
        grads, _ = backward(layers, record, d_pred)
        err = neural.grad_check(neural.layer_params(layers), loss_fn, neural.flatten_grads(grads))
        assert err < 1e-4

    def test_sigmoid_bce_net(self):
        layers = small_net(seed=13)
        rng = np.random.default_rng(7)
        x = rng.normal(size=(5, 5))
        y = rng.integers(0, 2, size=(5, 1)).astype(float)

        def loss_fn():
            return neural.bce_loss(forward(layers, x).output, y)[0]

        record = forward(layers, x)
        _, d_pred = neural.bce_loss(record.output, y)
        grads, _ = backward(layers, record, d_pred)
        err = neural.grad_check(neural.layer_params(layers), loss_fn, neural.flatten_grads(grads))
        assert err < 1e-4


class TestDeterminism:
    def test_training_steps_bit_identical(self):
        def run():
            layers = small_net(seed=21)
            params = neural.layer_params(layers)
            state = neural.init_optimizer(params, 1e-3, 0.99)
            rng = np.random.default_rng(0)
            x = rng.normal(size=(16, 5))
            y = rng.uniform(size=(16, 1))
            for _ in range(20):
                record = forward(layers, x)
                _, d = neural.bce_loss(record.output, y)
                grads, _ = backward(layers, record, d)
                adam_step(state, params, neural.flatten_grads(grads))
                state.end_epoch()
            return [p.copy() for p in params]

        a, b = run(), run()
        for pa, pb in zip(a, b):
            assert np.array_equal(pa, pb)
