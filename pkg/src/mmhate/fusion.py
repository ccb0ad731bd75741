"""Multimodal classifier: concatenated text+speech embeddings to hate probability.

Three ReLU dense layers (dropout after the first two during training) and
a single sigmoid output unit; trained with binary cross-entropy plus a
squared-L2 weight penalty, Adam, per-epoch learning-rate decay, and early
stopping on validation loss.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import neural
from .emotion import SpeechEmbedding
from .errors import DimensionError, ValidationError
from .text import TextEmbedding

TEXT_DIM = 768
SPEECH_DIM = 510
FUSED_DIM = TEXT_DIM + SPEECH_DIM  # 1278
DEFAULT_THRESHOLD = 0.7


class Label(Enum):
    NOT_HATE_SPEECH = 0
    HATE_SPEECH = 1


@dataclass(frozen=True)
class FusedEmbedding:
    """Concatenation text-first: values[0:768] text, values[768:1278] speech."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "values", values)
        if not np.all(np.isfinite(values)):
            raise ValidationError("fused embedding must be finite")


@dataclass(frozen=True)
class Prediction:
    probability: float
    label: Label


@dataclass(frozen=True)
class FusionConfig:
    hidden_sizes: tuple = (512, 128, 32)
    dropout_rates: tuple = (0.3, 0.3)
    l2_coefficient: float = 1e-5
    threshold: float = DEFAULT_THRESHOLD
    learning_rate: float = 1e-4
    learning_decay: float = 0.99
    patience: int = 10
    batch_size: int = 32
    max_epochs: int = 200
    rng_seed: int = 0
    input_dim: int = FUSED_DIM

    def __post_init__(self):
        if len(self.hidden_sizes) != 3 or any(s < 1 for s in self.hidden_sizes):
            raise ValidationError("hidden_sizes must be three positive integers")
        if len(self.dropout_rates) != 2 or any(not 0.0 <= r < 1.0 for r in self.dropout_rates):
            raise ValidationError("dropout_rates must be two values in [0, 1)")
        if not 0.0 < self.threshold < 1.0:
            raise ValidationError("threshold must be in (0, 1)")
        if self.patience < 1:
            raise ValidationError("patience must be at least 1")
        if self.l2_coefficient < 0 or self.learning_rate <= 0:
            raise ValidationError("l2_coefficient must be >= 0 and learning_rate > 0")
        if not 0.0 < self.learning_decay <= 1.0:
            raise ValidationError("learning_decay must be in (0, 1]")
        if self.batch_size < 1 or self.max_epochs < 1 or self.input_dim < 1:
            raise ValidationError("batch_size, max_epochs, and input_dim must be positive")


@dataclass
class FusionModel:
    layers: list  # three ReLU hidden layers + one sigmoid output unit
    config: FusionConfig

    def params(self) -> list:
        return neural.layer_params(self.layers)


def fuse(text: TextEmbedding, speech: SpeechEmbedding) -> FusedEmbedding:
    """Concatenate text-first into the joint input vector."""
    text_values = np.asarray(text.values, dtype=np.float64).reshape(-1)
    speech_values = np.asarray(speech.values, dtype=np.float64).reshape(-1)
    if text_values.size != TEXT_DIM:
        raise DimensionError(f"text embedding has length {text_values.size}, expected {TEXT_DIM}")
    if speech_values.size != SPEECH_DIM:
        raise DimensionError(f"speech embedding has length {speech_values.size}, expected {SPEECH_DIM}")
    return FusedEmbedding(values=np.concatenate([text_values, speech_values]))


def bce_l2_loss(predictions, targets, weights, l2_coefficient: float) -> float:
    """Mean binary cross-entropy plus l2_coefficient * sum of squared weights.

    `weights` is the collection of weight matrices to penalize (biases are
    excluded); probabilities are clamped to [1e-12, 1 - 1e-12] before logs.
    """
    predictions = np.asarray(predictions, dtype=np.float64).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if predictions.size < 1:
        raise ValidationError("need at least one prediction")
    if l2_coefficient < 0:
        raise ValidationError("l2_coefficient must be non-negative")
    loss, _ = neural.bce_loss(predictions, targets)
    penalty = float(l2_coefficient * sum(np.sum(np.asarray(w) ** 2) for w in weights))
    return loss + penalty


def build_fusion_model(config: FusionConfig) -> FusionModel:
    seeds = iter(np.random.SeedSequence(config.rng_seed).generate_state(4))
    h1, h2, h3 = config.hidden_sizes
    layers = [
        neural.dense_layer(config.input_dim, h1, "relu", int(next(seeds))),
        neural.dense_layer(h1, h2, "relu", int(next(seeds))),
        neural.dense_layer(h2, h3, "relu", int(next(seeds))),
        neural.dense_layer(h3, 1, "sigmoid", int(next(seeds))),
    ]
    return FusionModel(layers=layers, config=config)


def _model_loss(model: FusionModel, x: np.ndarray, y: np.ndarray) -> float:
    probs = neural.forward(model.layers, x).output[:, 0]
    return bce_l2_loss(probs, y, [layer.weights for layer in model.layers], model.config.l2_coefficient)


def _batch_grads(model: FusionModel, x: np.ndarray, y: np.ndarray, masks=None):
    record = neural.forward(model.layers, x, masks=masks)
    probs = record.output[:, 0]
    loss, d_probs = neural.bce_loss(probs, y)
    grads, _ = neural.backward(model.layers, record, d_probs[:, None], l2_coefficient=model.config.l2_coefficient)
    return neural.flatten_grads(grads), loss


@dataclass(frozen=True)
class FusionEpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    learning_rate: float


def _as_xy(dataset, input_dim: int):
    x, y = dataset
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise DimensionError("dataset must be (n, d) embeddings with n labels")
    if x.shape[0] == 0:
        raise ValidationError("dataset split is empty")
    if x.shape[1] != input_dim:
        raise DimensionError(f"embeddings have dimension {x.shape[1]}, expected {input_dim}")
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise ValidationError("labels must be 0 or 1")
    return x, y


def train_fusion(config: FusionConfig, train_set, val_set):
    """Minimize BCE + L2; early-stop after `patience` non-improving epochs.

    Returns (model with the best-validation parameters, per-epoch trace).
    Deterministic for a fixed config seed.
    """
    x_train, y_train = _as_xy(train_set, config.input_dim)
    x_val, y_val = _as_xy(val_set, config.input_dim)

    model = build_fusion_model(config)
    shuffle_ss, dropout_ss = np.random.SeedSequence(config.rng_seed).spawn(2)
    shuffle_rng = np.random.Generator(np.random.PCG64(shuffle_ss))
    dropout_rng = np.random.Generator(np.random.PCG64(dropout_ss))

    params = model.params()
    state = neural.init_optimizer(params, config.learning_rate, config.learning_decay)

    n = x_train.shape[0]
    trace: list[FusionEpochStats] = []
    best_val = np.inf
    best_params = None
    epochs_since_improvement = 0

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch_idx = order[start : start + config.batch_size]
            xb, yb = x_train[batch_idx], y_train[batch_idx]
            masks = [
                neural.dropout_masks(dropout_rng, (xb.shape[0], model.layers[0].out_dim), config.dropout_rates[0]),
                neural.dropout_masks(dropout_rng, (xb.shape[0], model.layers[1].out_dim), config.dropout_rates[1]),
                None,
                None,
            ]
            grads, _ = _batch_grads(model, xb, yb, masks=masks)
            neural.adam_step(state, params, grads)

        train_loss = _model_loss(model, x_train, y_train)
        val_loss = _model_loss(model, x_val, y_val)
        neural.check_finite("fusion training", *params)
        trace.append(FusionEpochStats(epoch=epoch, train_loss=train_loss, val_loss=val_loss, learning_rate=state.learning_rate))

        if val_loss < best_val:
            best_val = val_loss
            best_params = [p.copy() for p in params]
            epochs_since_improvement = 0
        else:
            epochs_since_improvement += 1
        state.end_epoch()
        if epochs_since_improvement >= config.patience:
            break

    for live, best in zip(params, best_params):
        live[...] = best
    return model, trace


def predict_proba_batch(model: FusionModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.config.input_dim:
        raise DimensionError(f"embeddings must be (n, {model.config.input_dim})")
    return neural.forward(model.layers, x).output[:, 0]


def predict(model: FusionModel, embedding: FusedEmbedding) -> Prediction:
    """Probability through the sigmoid unit; label by threshold (ties are hate)."""
    values = embedding.values if isinstance(embedding, FusedEmbedding) else np.asarray(embedding, dtype=np.float64)
    if values.size != model.config.input_dim:
        raise DimensionError(f"fused embedding has length {values.size}, expected {model.config.input_dim}")
    probability = float(neural.forward(model.layers, values.reshape(1, -1)).output[0, 0])
    label = Label.HATE_SPEECH if probability >= model.config.threshold else Label.NOT_HATE_SPEECH
    return Prediction(probability=probability, label=label)


def predict_labels(model: FusionModel, x: np.ndarray) -> np.ndarray:
    """0/1 labels for a batch of fused embeddings."""
    return (predict_proba_batch(model, x) >= model.config.threshold).astype(np.int64)


def fusion_grad_check(model: FusionModel, x: np.ndarray, y: np.ndarray, h: float = 1e-5) -> float:
    """Finite-difference check of BCE + L2 through the full network, no dropout."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    grads, _ = _batch_grads(model, x, y)
    return neural.grad_check(model.params(), lambda: _model_loss(model, x, y), grads, h=h)
