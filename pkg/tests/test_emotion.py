import numpy as np
import pytest

import oracles
from mmhate import neural
from mmhate.emotion import (
    ATTRIBUTES,
    EmotionAttributes,
    MtlConfig,
    build_mtl_model,
    enumerate_weight_grid,
    evaluate_rmse,
    extract_speech_embedding,
    mtl_grad_check,
    mtl_loss,
    predict_attributes,
    train_mtl,
    tune_loss_weights,
)
from mmhate.errors import DimensionError, ValidationError


def linear_dataset(n, dim, seed):
    """Targets are fixed linear functions of three input coordinates."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, size=(n, dim))
    y = np.stack(
        [0.5 + 0.3 * x[:, 0], 0.5 - 0.25 * x[:, 1], 0.4 + 0.2 * x[:, 2]],
        axis=1,
    )
    return x, y


def tiny_config(**overrides):
    defaults = dict(
        shared_layer_sizes=(16, 8),
        head_size=5,
        dropout_rate=0.0,
        loss_weights=(0.3, 0.3, 0.3),
        learning_rate=3e-3,
        learning_decay=1.0,
        l2_coefficient=0.0,
        batch_size=32,
        max_epochs=50,
        rng_seed=0,
    )
    defaults.update(overrides)
    return MtlConfig(**defaults)


class TestMtlLoss:
    def test_zero_when_equal(self):
        pred = EmotionAttributes(0.2, 0.5, 0.9)
        losses = mtl_loss(pred, pred, (0.3, 0.3, 0.3))
        assert losses == (0.0, 0.0, 0.0, 0.0)

    def test_equal_losses_scale_linearly(self):
        # identical per-task loss L with alpha=beta=gamma=0.3 gives 0.9 L
        pred = np.array([[0.5, 0.5, 0.5]])
        target = np.array([[0.7, 0.7, 0.7]])
        l_o, l_val, l_ars, l_dom = mtl_loss(pred, target, (0.3, 0.3, 0.3))
        assert l_val == l_ars == l_dom
        assert l_o == pytest.approx(0.9 * l_val, rel=1e-15)

    def test_table_weight_case(self):
        # alpha=0.2, beta=0.1, gamma=0.2 with per-task losses (1, 2, 3) -> 1.0
        pred = np.zeros((1, 3))
        target = np.array([[1.0, np.sqrt(2.0), np.sqrt(3.0)]])
        l_o, l_val, l_ars, l_dom = mtl_loss(pred, target, (0.2, 0.1, 0.2))
        assert l_val == pytest.approx(1.0, abs=1e-12)
        assert l_ars == pytest.approx(2.0, abs=1e-12)
        assert l_dom == pytest.approx(3.0, abs=1e-12)
        assert l_o == pytest.approx(1.0, abs=1e-12)

    def test_decomposition_identity_bitwise(self):
        rng = np.random.default_rng(0)
        pred = rng.uniform(size=(10, 3))
        target = rng.uniform(size=(10, 3))
        weights = (0.2, 0.1, 0.2)
        l_o, l_val, l_ars, l_dom = mtl_loss(pred, target, weights)
        assert l_o == weights[0] * l_val + weights[1] * l_ars + weights[2] * l_dom

    def test_rejects_bad_weights(self):
        pred = np.zeros((1, 3))
        with pytest.raises(ValidationError):
            mtl_loss(pred, pred, (0.5, 0.5, 0.5))  # sum > 1
        with pytest.raises(ValidationError):
            mtl_loss(pred, pred, (0.25, 0.1, 0.1))  # not a multiple of 0.1


class TestConfig:
    def test_weight_floor_enforced(self):
        with pytest.raises(ValidationError):
            MtlConfig(loss_weights=(0.0, 0.5, 0.5))

    def test_sum_constraint(self):
        with pytest.raises(ValidationError):
            MtlConfig(loss_weights=(0.4, 0.4, 0.4))

    def test_presets_match_tuned_values(self):
        f1 = MtlConfig.for_kind("f1")
        assert (f1.max_epochs, f1.batch_size) == (30, 32)
        assert f1.loss_weights == (0.2, 0.1, 0.2)
        assert (f1.learning_rate, f1.learning_decay, f1.l2_coefficient) == (1e-4, 0.99, 1e-7)
        f2 = MtlConfig.for_kind("f2")
        assert (f2.max_epochs, f2.batch_size) == (18, 128)
        assert f2.loss_weights == (0.1, 0.1, 0.2)
        assert (f2.learning_rate, f2.learning_decay, f2.l2_coefficient) == (1e-3, 0.96, 1e-9)


class TestTraining:
    def test_memorizes_single_sample(self):
        x, y = linear_dataset(1, 10, seed=1)
        config = tiny_config(batch_size=1, max_epochs=400, learning_rate=5e-3)
        model, trace = train_mtl(config, (x, y), (x, y))
        assert trace[-1].train_loss < 1e-4 or min(s.train_loss for s in trace) < 1e-4
        pred = predict_attributes(model, x[0])
        assert np.allclose(pred.as_array(), y[0], atol=0.01)

    def test_linear_targets_converge(self):
        x, y = linear_dataset(32, 20, seed=2)
        config = tiny_config(max_epochs=500)
        model, trace = train_mtl(config, (x, y), (x, y))
        rmse = evaluate_rmse(model, (x, y))
        assert all(r < 0.05 for r in rmse)

    def test_validation_best_invariant(self):
        x, y = linear_dataset(32, 12, seed=3)
        xv, yv = linear_dataset(16, 12, seed=4)
        config = tiny_config(max_epochs=60)
        model, trace = train_mtl(config, (x, y), (xv, yv))
        final_val = mtl_loss(
            np.stack([predict_attributes(model, row).as_array() for row in xv]), yv, config.loss_weights
        )[0]
        best_traced = min(s.val_loss for s in trace)
        assert final_val <= best_traced + 1e-12

    def test_deterministic_reruns(self):
        x, y = linear_dataset(24, 8, seed=5)
        config = tiny_config(max_epochs=15)
        model_a, trace_a = train_mtl(config, (x, y), (x, y))
        model_b, trace_b = train_mtl(config, (x, y), (x, y))
        for pa, pb in zip(model_a.params(), model_b.params()):
            assert np.array_equal(pa, pb)
        assert [s.val_loss for s in trace_a] == [s.val_loss for s in trace_b]

    def test_empty_split_rejected(self):
        x, y = linear_dataset(8, 6, seed=6)
        with pytest.raises(ValidationError):
            train_mtl(tiny_config(), (x[:0], y[:0]), (x, y))

    def test_dimension_mismatch_rejected(self):
        x, y = linear_dataset(8, 6, seed=7)
        xv, yv = linear_dataset(8, 5, seed=8)
        with pytest.raises(DimensionError):
            train_mtl(tiny_config(), (x, y), (xv, yv))


class TestPredictAndEmbed:
    def test_zero_weight_model_outputs_half(self):
        model = build_mtl_model(tiny_config(), input_dim=6)
        for layer in model.all_layers():
            layer.weights[...] = 0.0
            layer.biases[...] = 0.0
        pred = predict_attributes(model, np.zeros(6))
        assert pred.as_array().tolist() == [0.5, 0.5, 0.5]

    def test_outputs_strictly_inside_unit_interval(self):
        model = build_mtl_model(tiny_config(), input_dim=6)
        rng = np.random.default_rng(0)
        for _ in range(20):
            pred = predict_attributes(model, rng.uniform(-1, 1, 6))
            assert all(0.0 < v < 1.0 for v in pred.as_array())

    def test_embedding_length_default_head(self):
        model = build_mtl_model(MtlConfig.for_kind("f1"), input_dim=136)
        emb = extract_speech_embedding(model, np.zeros(136))
        assert emb.values.size == 510  # 3 x 170

    def test_zero_weight_model_zero_embedding(self):
        model = build_mtl_model(tiny_config(), input_dim=6)
        for layer in model.all_layers():
            layer.weights[...] = 0.0
            layer.biases[...] = 0.0
        emb = extract_speech_embedding(model, np.ones(6))
        assert np.all(emb.values == 0.0)

    def test_embedding_nonnegative(self):
        model = build_mtl_model(tiny_config(), input_dim=6)
        rng = np.random.default_rng(1)
        for _ in range(10):
            emb = extract_speech_embedding(model, rng.uniform(-1, 1, 6))
            assert np.all(emb.values >= 0.0)

    def test_embedding_order_valence_arousal_dominance(self):
        model = build_mtl_model(tiny_config(head_size=2), input_dim=4)
        for name, marker in zip(ATTRIBUTES, (1.0, 2.0, 3.0)):
            model.heads[name][0].weights[...] = 0.0
            model.heads[name][0].biases[...] = marker
        emb = extract_speech_embedding(model, np.zeros(4))
        assert emb.values.tolist() == [1.0, 1.0, 2.0, 2.0, 3.0, 3.0]


class TestHardParameterSharing:
    def test_head_perturbation_is_isolated(self):
        model = build_mtl_model(tiny_config(), input_dim=6)
        x = np.random.default_rng(2).uniform(-1, 1, 6)
        base = predict_attributes(model, x).as_array()
        model.heads["valence"][0].weights[0, 0] += 0.5
        after = predict_attributes(model, x).as_array()
        assert after[1] == base[1] and after[2] == base[2]

    def test_shared_perturbation_reaches_all(self):
        # all-positive parameters keep every ReLU active, so the change must propagate
        model = build_mtl_model(tiny_config(), input_dim=6)
        for layer in model.all_layers():
            layer.weights[...] = 0.1
            layer.biases[...] = 0.1
        x = np.full(6, 0.5)
        base = predict_attributes(model, x).as_array()
        model.shared[0].weights[0, 0] += 0.25
        after = predict_attributes(model, x).as_array()
        assert np.all(after != base)

    def test_zero_gamma_zeroes_dominance_gradients(self):
        from mmhate.emotion import _batch_grads

        config = tiny_config(loss_weights=(0.3, 0.3, 0.3))
        model = build_mtl_model(config, input_dim=6)
        # bypass the config floor: inject gamma = 0 directly into the loss weights
        object.__setattr__(model.config, "loss_weights", (0.3, 0.3, 0.0))
        rng = np.random.default_rng(3)
        x = rng.uniform(-1, 1, (8, 6))
        y = rng.uniform(0, 1, (8, 3))
        grads, _ = _batch_grads(model, x, y)
        # gradient layout: shared (4 arrays), then valence, arousal, dominance heads (4 each)
        dominance_grads = grads[12:16]
        for g in dominance_grads:
            assert np.all(g == 0.0)
        assert any(np.any(g != 0.0) for g in grads[4:8])


def jitter_biases(layers, rng):
    """Move pre-activations off exact ReLU kinks (zero biases + dead inputs
    would otherwise pin them at 0, where central differences and the
    relu'(0) = 0 convention legitimately disagree)."""
    for layer in layers:
        layer.biases[...] = rng.uniform(0.01, 0.05, size=layer.biases.shape)


class TestGradCheck:
    def test_full_loss_gradcheck_table_weights(self):
        for seed in range(3):
            config = tiny_config(
                shared_layer_sizes=(8, 6), head_size=5, loss_weights=(0.2, 0.1, 0.2),
                l2_coefficient=1e-3, rng_seed=seed,
            )
            model = build_mtl_model(config, input_dim=7)
            rng = np.random.default_rng(seed)
            jitter_biases(model.all_layers(), rng)
            x = rng.uniform(-1, 1, (4, 7))
            y = rng.uniform(0, 1, (4, 3))
            assert mtl_grad_check(model, x, y) < 1e-4


class TestEvaluateRmse:
    def test_perfect_predictions(self):
        from mmhate.emotion import predict_batch

        model = build_mtl_model(tiny_config(), input_dim=10)
        x = np.random.default_rng(9).uniform(-1, 1, (16, 10))
        rmse = evaluate_rmse(model, (x, predict_batch(model, x)))
        assert all(r == 0.0 for r in rmse)

    def test_constant_offset(self):
        # zero-weight model predicts exactly 0.5 everywhere; shift targets by d
        model = build_mtl_model(tiny_config(), input_dim=6)
        for layer in model.all_layers():
            layer.weights[...] = 0.0
            layer.biases[...] = 0.0
        x = np.random.default_rng(4).uniform(-1, 1, (12, 6))
        rmse = evaluate_rmse(model, (x, np.full((12, 3), 0.5 - 0.125)))
        assert all(r == pytest.approx(0.125, abs=1e-15) for r in rmse)

    def test_matches_recomputation_oracle(self):
        model = build_mtl_model(tiny_config(), input_dim=6)
        rng = np.random.default_rng(5)
        x = rng.uniform(-1, 1, (30, 6))
        y = rng.uniform(0, 1, (30, 3))
        preds = np.stack([predict_attributes(model, row).as_array() for row in x])
        expected = oracles.rmse_per_column(preds, y)
        assert np.allclose(evaluate_rmse(model, (x, y)), expected, atol=1e-9)

    def test_empty_set_rejected(self):
        model = build_mtl_model(tiny_config(), input_dim=6)
        with pytest.raises(ValidationError):
            evaluate_rmse(model, (np.zeros((0, 6)), np.zeros((0, 3))))


class TestWeightGrid:
    def test_cardinality_matches_enumeration_oracle(self):
        grid = enumerate_weight_grid()
        assert len(grid) == oracles.weight_grid_size()
        assert len(grid) == 120

    def test_constraints_hold(self):
        for weights in enumerate_weight_grid():
            assert sum(weights) <= 1.0 + 1e-12
            assert all(0.1 - 1e-12 <= w <= 1.0 for w in weights)

    def test_tune_produces_full_report(self):
        x, y = linear_dataset(16, 4, seed=10)
        xv, yv = linear_dataset(8, 4, seed=11)
        config = tiny_config(shared_layer_sizes=(6, 4), head_size=3, batch_size=8, max_epochs=3)
        best, report = tune_loss_weights(config, (x, y), (xv, yv))
        assert len(report) == 120
        assert best in [(p.alpha, p.beta, p.gamma) for p in report]
        for point in report:
            assert point.alpha + point.beta + point.gamma <= 1.0 + 1e-12
            for value in (point.rmse_val, point.rmse_aro, point.rmse_dom):
                assert np.isfinite(value)
