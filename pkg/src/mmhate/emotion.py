"""Multi-task valence/arousal/dominance regressor and speech embeddings.

Two shared ReLU layers (hard parameter sharing, dropout on their outputs
during training) feed three attribute-specific ReLU layers of 170 units;
each head ends in a single sigmoid unit. The overall training loss is the
weighted sum alpha*L_val + beta*L_ars + gamma*L_dom of per-task MSE
losses, plus an L2 weight penalty. The speech embedding is the
concatenation of the three head-layer activations (510 dims at the
default head size).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace

import numpy as np

from . import neural
from .errors import DimensionError, ValidationError
from .features import FeatureRepresentation, FeatureScaler
from .neural import DenseLayer

ATTRIBUTES = ("valence", "arousal", "dominance")
DEFAULT_HEAD_SIZE = 170
WEIGHT_GRID_STEP = 0.1


@dataclass(frozen=True)
class EmotionAttributes:
    valence: float
    arousal: float
    dominance: float

    def __post_init__(self):
        for name in ATTRIBUTES:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {value}")

    def as_array(self) -> np.ndarray:
        return np.array([self.valence, self.arousal, self.dominance])


@dataclass(frozen=True)
class SpeechEmbedding:
    """Concatenated head activations, ordered valence | arousal | dominance."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "values", values)
        if not np.all(np.isfinite(values)):
            raise ValidationError("speech embedding must be finite")


def _validate_loss_weights(weights, enforce_floor: bool = True) -> tuple:
    weights = tuple(float(w) for w in weights)
    if len(weights) != 3:
        raise ValidationError("loss weights must be a (alpha, beta, gamma) triple")
    for w in weights:
        low = WEIGHT_GRID_STEP if enforce_floor else 0.0
        if not low - 1e-9 <= w <= 1.0 + 1e-9:
            raise ValidationError(f"loss weight {w} outside [{low}, 1]")
        if abs(round(w * 10) - w * 10) > 1e-9:
            raise ValidationError(f"loss weight {w} is not a multiple of 0.1")
    if sum(weights) > 1.0 + 1e-9:
        raise ValidationError(f"loss weights sum to {sum(weights):.3f} > 1")
    return weights


@dataclass(frozen=True)
class MtlConfig:
    shared_layer_sizes: tuple = (256, 128)
    head_size: int = DEFAULT_HEAD_SIZE
    dropout_rate: float = 0.2
    loss_weights: tuple = (0.2, 0.1, 0.2)
    learning_rate: float = 1e-4
    learning_decay: float = 0.99
    l2_coefficient: float = 1e-7
    batch_size: int = 32
    max_epochs: int = 30
    rng_seed: int = 0

    def __post_init__(self):
        if len(self.shared_layer_sizes) != 2 or any(s < 1 for s in self.shared_layer_sizes):
            raise ValidationError("shared_layer_sizes must be two positive integers")
        if self.head_size < 1:
            raise ValidationError("head_size must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValidationError("dropout_rate must be in [0, 1)")
        object.__setattr__(self, "loss_weights", _validate_loss_weights(self.loss_weights))
        if self.learning_rate <= 0 or self.l2_coefficient < 0:
            raise ValidationError("learning_rate must be positive and l2_coefficient non-negative")
        if not 0.0 < self.learning_decay <= 1.0:
            raise ValidationError("learning_decay must be in (0, 1]")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValidationError("batch_size and max_epochs must be positive")

    @staticmethod
    def for_kind(kind: str) -> "MtlConfig":
        """Tuned presets for the two feature representations."""
        if kind == "f1":
            return MtlConfig(
                shared_layer_sizes=(256, 128),
                loss_weights=(0.2, 0.1, 0.2),
                learning_rate=1e-4,
                learning_decay=0.99,
                l2_coefficient=1e-7,
                batch_size=32,
                max_epochs=30,
            )
        if kind == "f2":
            return MtlConfig(
                shared_layer_sizes=(1024, 512),
                loss_weights=(0.1, 0.1, 0.2),
                learning_rate=1e-3,
                learning_decay=0.96,
                l2_coefficient=1e-9,
                batch_size=128,
                max_epochs=18,
            )
        raise ValidationError(f"unknown feature kind {kind!r}")


@dataclass
class MtlModel:
    shared: list  # two ReLU DenseLayers
    heads: dict  # attribute -> [hidden DenseLayer, output DenseLayer]
    scaler: FeatureScaler | None
    config: MtlConfig
    input_dim: int

    def all_layers(self) -> list:
        layers = list(self.shared)
        for name in ATTRIBUTES:
            layers.extend(self.heads[name])
        return layers

    def params(self) -> list:
        return neural.layer_params(self.all_layers())

    @property
    def embedding_dim(self) -> int:
        return 3 * self.config.head_size


def build_mtl_model(config: MtlConfig, input_dim: int, scaler: FeatureScaler | None = None) -> MtlModel:
    """He-initialized model; layer seeds derive deterministically from the config seed."""
    if input_dim < 1:
        raise ValidationError("input_dim must be positive")
    seeds = iter(np.random.SeedSequence(config.rng_seed).generate_state(2 + 6))
    s1, s2 = config.shared_layer_sizes
    shared = [
        neural.dense_layer(input_dim, s1, "relu", int(next(seeds))),
        neural.dense_layer(s1, s2, "relu", int(next(seeds))),
    ]
    heads = {}
    for name in ATTRIBUTES:
        heads[name] = [
            neural.dense_layer(s2, config.head_size, "relu", int(next(seeds))),
            neural.dense_layer(config.head_size, 1, "sigmoid", int(next(seeds))),
        ]
    return MtlModel(shared=shared, heads=heads, scaler=scaler, config=config, input_dim=input_dim)


def mtl_loss(pred, target, weights):
    """Weighted multi-task MSE: returns (L_o, L_val, L_ars, L_dom).

    Accepts single attribute triples or (batch, 3) arrays. The combined
    loss is computed exactly as alpha*L_val + beta*L_ars + gamma*L_dom of
    the returned per-task values. Weights of zero are allowed here (the
    0.1 floor is a training-config constraint, not a loss-function one).
    """
    alpha, beta, gamma = _validate_loss_weights(weights, enforce_floor=False)
    pred = pred.as_array() if isinstance(pred, EmotionAttributes) else np.asarray(pred, dtype=np.float64)
    target = target.as_array() if isinstance(target, EmotionAttributes) else np.asarray(target, dtype=np.float64)
    pred = pred.reshape(-1, 3)
    target = target.reshape(-1, 3)
    if pred.shape != target.shape:
        raise DimensionError("prediction/target shapes differ")
    per_task = ((pred - target) ** 2).mean(axis=0)
    l_val, l_ars, l_dom = (float(v) for v in per_task)
    l_o = alpha * l_val + beta * l_ars + gamma * l_dom
    return l_o, l_val, l_ars, l_dom


def _forward_all(model: MtlModel, x: np.ndarray, shared_masks=None):
    """Trunk + heads forward; returns (trunk record, head records, preds (B, 3))."""
    trunk = neural.forward(model.shared, x, masks=shared_masks)
    trunk_out = trunk.output
    head_records = {}
    preds = np.zeros((trunk_out.shape[0], 3))
    for i, name in enumerate(ATTRIBUTES):
        rec = neural.forward(model.heads[name], trunk_out)
        head_records[name] = rec
        preds[:, i] = rec.output[:, 0]
    return trunk, head_records, preds


def _batch_grads(model: MtlModel, x: np.ndarray, y: np.ndarray, shared_masks=None):
    """Analytic gradients of the weighted loss (plus L2) for one batch.

    Returns (grads aligned with model.params(), losses tuple).
    """
    weights = model.config.loss_weights
    l2 = model.config.l2_coefficient
    trunk, head_records, preds = _forward_all(model, x, shared_masks)
    losses = mtl_loss(preds, y, weights)

    batch = x.shape[0]
    d_trunk_out = np.zeros_like(trunk.output)
    head_grads = {}
    for i, name in enumerate(ATTRIBUTES):
        d_pred = weights[i] * 2.0 * (preds[:, i : i + 1] - y[:, i : i + 1]) / batch
        grads, d_in = neural.backward(model.heads[name], head_records[name], d_pred, l2_coefficient=l2)
        head_grads[name] = grads
        d_trunk_out += d_in
    trunk_grads, _ = neural.backward(model.shared, trunk, d_trunk_out, l2_coefficient=l2)

    ordered = neural.flatten_grads(trunk_grads)
    for name in ATTRIBUTES:
        ordered.extend(neural.flatten_grads(head_grads[name]))
    return ordered, losses


def _full_loss(model: MtlModel, x: np.ndarray, y: np.ndarray) -> float:
    """Weighted MSE plus L2 penalty, no dropout (used for eval and grad checks)."""
    _, _, preds = _forward_all(model, x)
    l_o, *_ = mtl_loss(preds, y, model.config.loss_weights)
    return l_o + neural.l2_penalty(model.all_layers(), model.config.l2_coefficient)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    train_per_task: tuple
    val_per_task: tuple
    learning_rate: float


def _as_xy(dataset, input_dim=None):
    x, y = dataset
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or y.shape[1] != 3 or x.shape[0] != y.shape[0]:
        raise DimensionError("dataset must be (n, d) features with (n, 3) targets")
    if x.shape[0] == 0:
        raise ValidationError("dataset split is empty")
    if input_dim is not None and x.shape[1] != input_dim:
        raise DimensionError(f"features have dimension {x.shape[1]}, expected {input_dim}")
    return x, y


def train_mtl(config: MtlConfig, train_set, val_set, scaler: FeatureScaler | None = None):
    """Train with Adam on the weighted loss; keep the best-validation epoch.

    Inputs are (X, Y) pairs with features already scaled to [-1, 1] and
    targets in [0, 1]. Returns (model, per-epoch trace). Deterministic for
    a fixed config seed.
    """
    x_train, y_train = _as_xy(train_set)
    x_val, y_val = _as_xy(val_set, input_dim=x_train.shape[1])

    model = build_mtl_model(config, x_train.shape[1], scaler)
    shuffle_ss, dropout_ss = np.random.SeedSequence(config.rng_seed).spawn(2)
    shuffle_rng = np.random.Generator(np.random.PCG64(shuffle_ss))
    dropout_rng = np.random.Generator(np.random.PCG64(dropout_ss))

    params = model.params()
    state = neural.init_optimizer(params, config.learning_rate, config.learning_decay)

    n = x_train.shape[0]
    trace: list[EpochStats] = []
    best_val = np.inf
    best_params = None

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch_idx = order[start : start + config.batch_size]
            xb, yb = x_train[batch_idx], y_train[batch_idx]
            masks = None
            if config.dropout_rate > 0:
                masks = [
                    neural.dropout_masks(dropout_rng, (xb.shape[0], layer.out_dim), config.dropout_rate)
                    for layer in model.shared
                ]
            grads, _ = _batch_grads(model, xb, yb, shared_masks=masks)
            neural.adam_step(state, params, grads)

        _, _, train_preds = _forward_all(model, x_train)
        train_losses = mtl_loss(train_preds, y_train, config.loss_weights)
        _, _, val_preds = _forward_all(model, x_val)
        val_losses = mtl_loss(val_preds, y_val, config.loss_weights)
        neural.check_finite("mtl training", train_preds, *params)
        trace.append(
            EpochStats(
                epoch=epoch,
                train_loss=train_losses[0],
                val_loss=val_losses[0],
                train_per_task=train_losses[1:],
                val_per_task=val_losses[1:],
                learning_rate=state.learning_rate,
            )
        )
        if val_losses[0] < best_val:
            best_val = val_losses[0]
            best_params = [p.copy() for p in params]
        state.end_epoch()

    for live, best in zip(params, best_params):
        live[...] = best
    return model, trace


def predict_attributes(model: MtlModel, rep) -> EmotionAttributes:
    """Predict the three attributes from an already-scaled representation."""
    values = rep.values if isinstance(rep, FeatureRepresentation) else np.asarray(rep, dtype=np.float64)
    if values.size != model.input_dim:
        raise DimensionError(f"representation has {values.size} dims, model expects {model.input_dim}")
    _, _, preds = _forward_all(model, values.reshape(1, -1))
    return EmotionAttributes(valence=float(preds[0, 0]), arousal=float(preds[0, 1]), dominance=float(preds[0, 2]))


def extract_speech_embedding(model: MtlModel, rep) -> SpeechEmbedding:
    """Concatenate the three post-ReLU head activations (V | A | D)."""
    values = rep.values if isinstance(rep, FeatureRepresentation) else np.asarray(rep, dtype=np.float64)
    if values.size != model.input_dim:
        raise DimensionError(f"representation has {values.size} dims, model expects {model.input_dim}")
    trunk = neural.forward(model.shared, values.reshape(1, -1))
    pieces = []
    for name in ATTRIBUTES:
        hidden = neural.forward(model.heads[name][:1], trunk.output)
        pieces.append(hidden.output[0])
    return SpeechEmbedding(values=np.concatenate(pieces))


def batch_speech_embeddings(model: MtlModel, x: np.ndarray) -> np.ndarray:
    """Embeddings for scaled feature rows, one per row."""
    x = np.asarray(x, dtype=np.float64)
    trunk = neural.forward(model.shared, x)
    pieces = [neural.forward(model.heads[name][:1], trunk.output).output for name in ATTRIBUTES]
    return np.concatenate(pieces, axis=1)


def predict_batch(model: MtlModel, x: np.ndarray) -> np.ndarray:
    _, _, preds = _forward_all(model, np.asarray(x, dtype=np.float64))
    return preds


def evaluate_rmse(model: MtlModel, dataset) -> tuple:
    """Per-attribute RMSE over a labeled (X, Y) set."""
    x, y = _as_xy(dataset, input_dim=model.input_dim)
    preds = predict_batch(model, x)
    return tuple(float(v) for v in np.sqrt(((preds - y) ** 2).mean(axis=0)))


def enumerate_weight_grid():
    """All (alpha, beta, gamma) with each in {0.1..1.0} and sum <= 1."""
    grid = []
    for a in range(1, 11):
        for b in range(1, 11):
            for c in range(1, 11):
                if a + b + c <= 10:
                    grid.append((a / 10.0, b / 10.0, c / 10.0))
    return grid


@dataclass(frozen=True)
class GridPoint:
    alpha: float
    beta: float
    gamma: float
    rmse_val: float
    rmse_aro: float
    rmse_dom: float

    @property
    def mean_rmse(self) -> float:
        return (self.rmse_val + self.rmse_aro + self.rmse_dom) / 3.0


def tune_loss_weights(config: MtlConfig, train_set, val_set):
    """Grid-search the loss weights; returns (best triple, full grid report).

    Each grid point trains at a reduced budget (max_epochs/3, floor 3) with
    a seed derived from the base seed and grid index, and is ranked by the
    unweighted mean of the three validation RMSEs.
    """
    budget = max(3, config.max_epochs // 3)
    report = []
    best = None
    for index, weights in enumerate(enumerate_weight_grid()):
        trial = replace(config, loss_weights=weights, max_epochs=budget, rng_seed=config.rng_seed + 7919 * index)
        model, _ = train_mtl(trial, train_set, val_set)
        rmse = evaluate_rmse(model, val_set)
        point = GridPoint(*weights, *rmse)
        report.append(point)
        if best is None or point.mean_rmse < best.mean_rmse:
            best = point
    return (best.alpha, best.beta, best.gamma), report


def mtl_grad_check(model: MtlModel, x: np.ndarray, y: np.ndarray, h: float = 1e-5) -> float:
    """Finite-difference check of the full weighted loss (incl. L2), no dropout."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    grads, _ = _batch_grads(model, x, y)
    return neural.grad_check(model.params(), lambda: _full_loss(model, x, y), grads, h=h)
