"""Dense-network machinery shared by the two trainable models.

Layers are plain weight/bias pairs with a ReLU, sigmoid, or linear
activation; backpropagation is hand-rolled for the fixed architectures.
Training math runs in double precision; dropout is inverted (masks carry
the 1/keep rescale) so inference needs no correction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ValidationError

ACTIVATIONS = ("linear", "relu", "sigmoid")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# sigmoid pre-activations are clamped here; |z| = 36 already saturates
# double precision within 1 ulp of 0/1 while keeping the output open in (0, 1)
_SIGMOID_CLAMP = 36.0


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.clip(z, -_SIGMOID_CLAMP, _SIGMOID_CLAMP)
    return 1.0 / (1.0 + np.exp(-z))


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: str

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64).reshape(-1)
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.weights.shape[0] != self.biases.size:
            raise DimensionError("weight matrix must be (out, in) with matching bias length")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.biases))):
            raise ValidationError("layer parameters must be finite")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


def he_init(fan_in: int, fan_out: int, rng_seed: int) -> np.ndarray:
    """He-normal weights: N(0, sqrt(2/fan_in)), deterministic per seed."""
    if fan_in < 1 or fan_out < 1:
        raise ValidationError("fan_in and fan_out must be at least 1")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in))


def dense_layer(fan_in: int, fan_out: int, activation: str, rng_seed: int) -> DenseLayer:
    """He-initialized weights with zero biases."""
    return DenseLayer(weights=he_init(fan_in, fan_out, rng_seed), biases=np.zeros(fan_out), activation=activation)


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(0.0, z)
    if kind == "sigmoid":
        return sigmoid(z)
    return z


def _activation_grad(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0).astype(np.float64)  # gradient at exactly 0 is defined as 0
    if kind == "sigmoid":
        return a * (1.0 - a)
    return np.ones_like(z)


@dataclass
class ForwardRecord:
    """Everything `backward` needs: per-layer inputs, pre-activations, and masks."""

    layer_inputs: list  # input to each layer (post-dropout of the previous one)
    pre_activations: list
    activations: list  # post-activation, before dropout
    dropout_masks: list  # per layer: multiplicative mask (0 or 1/keep) or None

    @property
    def output(self) -> np.ndarray:
        mask = self.dropout_masks[-1]
        out = self.activations[-1]
        return out if mask is None else out * mask


def dropout_masks(rng: np.random.Generator, shape, rate: float) -> np.ndarray:
    """Inverted-dropout mask: zeros with probability `rate`, survivors scaled by 1/keep."""
    if not 0.0 <= rate < 1.0:
        raise ValidationError("dropout rate must be in [0, 1)")
    keep = 1.0 - rate
    return (rng.random(shape) < keep).astype(np.float64) / keep


def forward(layers, x: np.ndarray, masks=None) -> ForwardRecord:
    """Run a chain of layers on a (batch, in) matrix, recording intermediates.

    `masks` is an optional per-layer list; entry i multiplies layer i's
    activation (training mode). Pass None for inference.
    """
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.shape[1] != layers[0].in_dim:
        raise DimensionError(f"input has dimension {x.shape[1]}, layer expects {layers[0].in_dim}")
    if masks is None:
        masks = [None] * len(layers)
    if len(masks) != len(layers):
        raise ValidationError("one dropout mask slot per layer required")

    inputs, zs, acts = [], [], []
    current = x
    for layer, mask in zip(layers, masks):
        if current.shape[1] != layer.in_dim:
            raise DimensionError(f"layer expects {layer.in_dim} inputs, got {current.shape[1]}")
        inputs.append(current)
        z = current @ layer.weights.T + layer.biases
        a = _activate(z, layer.activation)
        zs.append(z)
        acts.append(a)
        current = a if mask is None else a * mask
    return ForwardRecord(layer_inputs=inputs, pre_activations=zs, activations=acts, dropout_masks=list(masks))


def backward(layers, record: ForwardRecord, loss_gradient: np.ndarray, l2_coefficient: float = 0.0):
    """Backpropagate dL/d(output) through the chain.

    Returns (grads, d_input) where grads is a per-layer list of (dW, db)
    and d_input is dL/d(chain input), letting callers join sub-networks.
    The L2 term contributes 2*l2*W to every weight gradient; biases are
    not penalized.
    """
    if len(record.layer_inputs) != len(layers):
        raise ValidationError("forward record does not match this layer chain")
    d_out = np.asarray(loss_gradient, dtype=np.float64)
    if d_out.ndim == 1:
        d_out = d_out[None, :]
    if d_out.shape != record.activations[-1].shape:
        raise DimensionError("loss gradient shape does not match the forward output")

    grads = [None] * len(layers)
    for i in reversed(range(len(layers))):
        layer = layers[i]
        mask = record.dropout_masks[i]
        if mask is not None:
            d_out = d_out * mask
        dz = d_out * _activation_grad(record.pre_activations[i], record.activations[i], layer.activation)
        dw = dz.T @ record.layer_inputs[i]
        if l2_coefficient:
            dw = dw + 2.0 * l2_coefficient * layer.weights
        db = dz.sum(axis=0)
        grads[i] = (dw, db)
        d_out = dz @ layer.weights
    return grads, d_out


def layer_params(layers) -> list:
    """Flat parameter list [W0, b0, W1, b1, ...] (live arrays, not copies)."""
    params = []
    for layer in layers:
        params.append(layer.weights)
        params.append(layer.biases)
    return params


def flatten_grads(grads) -> list:
    return [g for dw_db in grads for g in dw_db]


@dataclass
class OptimizerState:
    """Adam accumulators plus the per-epoch learning-rate decay."""

    first_moment: list
    second_moment: list
    step_count: int
    learning_rate: float
    decay_rate: float = 1.0

    def end_epoch(self) -> None:
        self.learning_rate *= self.decay_rate


def init_optimizer(params, learning_rate: float, decay_rate: float = 1.0) -> OptimizerState:
    if learning_rate <= 0:
        raise ValidationError("learning_rate must be positive")
    if not 0.0 < decay_rate <= 1.0:
        raise ValidationError("decay_rate must be in (0, 1]")
    return OptimizerState(
        first_moment=[np.zeros_like(p) for p in params],
        second_moment=[np.zeros_like(p) for p in params],
        step_count=0,
        learning_rate=learning_rate,
        decay_rate=decay_rate,
    )


def adam_step(state: OptimizerState, params, grads):
    """One in-place Adam update (beta1=0.9, beta2=0.999, eps=1e-8)."""
    if len(params) != len(state.first_moment) or len(grads) != len(params):
        raise ValidationError("parameter/gradient lists do not match optimizer state")
    state.step_count += 1
    t = state.step_count
    bias1 = 1.0 - ADAM_BETA1**t
    bias2 = 1.0 - ADAM_BETA2**t
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g**2
        p -= state.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + ADAM_EPS)
    return params, state


def mse_loss(pred: np.ndarray, target: np.ndarray):
    """Mean squared error and its gradient w.r.t. pred."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise DimensionError("prediction/target shapes differ")
    diff = pred - target
    loss = float(np.mean(diff**2))
    return loss, 2.0 * diff / diff.size


BCE_CLAMP_EPS = 1e-12


def bce_loss(probs: np.ndarray, targets: np.ndarray):
    """Binary cross-entropy (probabilities clamped to [eps, 1-eps]) and gradient."""
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if probs.shape != targets.shape:
        raise DimensionError("prediction/target shapes differ")
    p = np.clip(probs, BCE_CLAMP_EPS, 1.0 - BCE_CLAMP_EPS)
    n = p.size
    loss = float(-np.sum(targets * np.log(p) + (1.0 - targets) * np.log(1.0 - p)) / n)
    grad = -(targets / p - (1.0 - targets) / (1.0 - p)) / n
    return loss, grad


def l2_penalty(layers, coefficient: float) -> float:
    """coefficient * sum of squared weights, biases excluded."""
    if coefficient == 0.0:
        return 0.0
    return float(coefficient * sum(np.sum(layer.weights**2) for layer in layers))


def grad_check(params, loss_fn, analytic_grads, h: float = 1e-5) -> float:
    """Max relative error between analytic gradients and central differences.

    `params` must be the live arrays read by `loss_fn`; each entry is
    perturbed in place and restored. Relative error uses
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
    """
    worst = 0.0
    for p, g in zip(params, analytic_grads):
        flat_p = p.reshape(-1)
        flat_g = np.asarray(g, dtype=np.float64).reshape(-1)
        for i in range(flat_p.size):
            original = flat_p[i]
            flat_p[i] = original + h
            loss_plus = loss_fn()
            flat_p[i] = original - h
            loss_minus = loss_fn()
            flat_p[i] = original
            numeric = (loss_plus - loss_minus) / (2.0 * h)
            denom = max(abs(flat_g[i]), abs(numeric), 1e-12)
            worst = max(worst, abs(flat_g[i] - numeric) / denom)
    return worst


def check_finite(name: str, *arrays) -> None:
    from .errors import NumericError

    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"NaN/Inf detected in {name}")
