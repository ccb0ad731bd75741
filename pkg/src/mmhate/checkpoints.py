"""Checkpoint serialization for the two trainable models.

Checkpoints are JSON documents holding layer sizes, activation tags, the
fitted scaler, hyperparameters, and row-major weight/bias arrays. Values
are stored in single precision, formatted with 9 significant digits
(enough to round-trip float32 exactly).
"""

from __future__ import annotations

import json

import numpy as np

from .emotion import ATTRIBUTES, MtlConfig, MtlModel
from .errors import ValidationError
from .features import FeatureScaler
from .fusion import FusionConfig, FusionModel
from .neural import DenseLayer

FORMAT_VERSION = 1


def _quantize(array) -> list:
    """float32 values as Python floats with 9 significant digits."""
    arr = np.asarray(array, dtype=np.float32)
    flat = [float(f"{v:.9g}") for v in arr.reshape(-1)]
    return np.asarray(flat, dtype=np.float64).reshape(arr.shape).tolist()


def _layer_doc(layer: DenseLayer) -> dict:
    return {
        "shape": [layer.out_dim, layer.in_dim],
        "activation": layer.activation,
        "weights": _quantize(layer.weights),
        "biases": _quantize(layer.biases),
    }


def _layer_from_doc(doc: dict) -> DenseLayer:
    weights = np.asarray(doc["weights"], dtype=np.float64)
    if list(weights.shape) != list(doc["shape"]):
        raise ValidationError(f"checkpoint layer shape mismatch: {weights.shape} vs {doc['shape']}")
    return DenseLayer(weights=weights, biases=np.asarray(doc["biases"], dtype=np.float64), activation=doc["activation"])


def _scaler_doc(scaler: FeatureScaler | None) -> dict | None:
    if scaler is None:
        return None
    return {"min": _quantize(scaler.minimum), "max": _quantize(scaler.maximum)}


def _scaler_from_doc(doc) -> FeatureScaler | None:
    if doc is None:
        return None
    return FeatureScaler(minimum=np.asarray(doc["min"]), maximum=np.asarray(doc["max"]))


def save_mtl_checkpoint(path, model: MtlModel) -> None:
    cfg = model.config
    doc = {
        "format_version": FORMAT_VERSION,
        "model_kind": "mtl",
        "input_dim": model.input_dim,
        "layer_sizes": [layer.out_dim for layer in model.all_layers()],
        "activations": [layer.activation for layer in model.all_layers()],
        "hyperparameters": {
            "shared_layer_sizes": list(cfg.shared_layer_sizes),
            "head_size": cfg.head_size,
            "dropout_rate": cfg.dropout_rate,
            "loss_weights": list(cfg.loss_weights),
            "learning_rate": cfg.learning_rate,
            "learning_decay": cfg.learning_decay,
            "l2_coefficient": cfg.l2_coefficient,
            "batch_size": cfg.batch_size,
            "max_epochs": cfg.max_epochs,
            "rng_seed": cfg.rng_seed,
        },
        "scaler": _scaler_doc(model.scaler),
        "shared": [_layer_doc(layer) for layer in model.shared],
        "heads": {name: [_layer_doc(layer) for layer in model.heads[name]] for name in ATTRIBUTES},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_mtl_checkpoint(path) -> MtlModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("model_kind") != "mtl":
        raise ValidationError(f"{path}: checkpoint is {doc.get('model_kind')!r}, expected 'mtl'")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValidationError(f"{path}: unsupported checkpoint version {doc.get('format_version')}")
    hp = doc["hyperparameters"]
    config = MtlConfig(
        shared_layer_sizes=tuple(hp["shared_layer_sizes"]),
        head_size=hp["head_size"],
        dropout_rate=hp["dropout_rate"],
        loss_weights=tuple(hp["loss_weights"]),
        learning_rate=hp["learning_rate"],
        learning_decay=hp["learning_decay"],
        l2_coefficient=hp["l2_coefficient"],
        batch_size=hp["batch_size"],
        max_epochs=hp["max_epochs"],
        rng_seed=hp["rng_seed"],
    )
    return MtlModel(
        shared=[_layer_from_doc(d) for d in doc["shared"]],
        heads={name: [_layer_from_doc(d) for d in doc["heads"][name]] for name in ATTRIBUTES},
        scaler=_scaler_from_doc(doc.get("scaler")),
        config=config,
        input_dim=doc["input_dim"],
    )


def save_fusion_checkpoint(path, model: FusionModel) -> None:
    cfg = model.config
    doc = {
        "format_version": FORMAT_VERSION,
        "model_kind": "fusion",
        "input_dim": cfg.input_dim,
        "layer_sizes": [layer.out_dim for layer in model.layers],
        "activations": [layer.activation for layer in model.layers],
        "hyperparameters": {
            "hidden_sizes": list(cfg.hidden_sizes),
            "dropout_rates": list(cfg.dropout_rates),
            "l2_coefficient": cfg.l2_coefficient,
            "threshold": cfg.threshold,
            "learning_rate": cfg.learning_rate,
            "learning_decay": cfg.learning_decay,
            "patience": cfg.patience,
            "batch_size": cfg.batch_size,
            "max_epochs": cfg.max_epochs,
            "rng_seed": cfg.rng_seed,
        },
        "scaler": None,
        "layers": [_layer_doc(layer) for layer in model.layers],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_fusion_checkpoint(path) -> FusionModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("model_kind") != "fusion":
        raise ValidationError(f"{path}: checkpoint is {doc.get('model_kind')!r}, expected 'fusion'")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValidationError(f"{path}: unsupported checkpoint version {doc.get('format_version')}")
    hp = doc["hyperparameters"]
    config = FusionConfig(
        hidden_sizes=tuple(hp["hidden_sizes"]),
        dropout_rates=tuple(hp["dropout_rates"]),
        l2_coefficient=hp["l2_coefficient"],
        threshold=hp["threshold"],
        learning_rate=hp["learning_rate"],
        learning_decay=hp["learning_decay"],
        patience=hp["patience"],
        batch_size=hp["batch_size"],
        max_epochs=hp["max_epochs"],
        rng_seed=hp["rng_seed"],
        input_dim=doc["input_dim"],
    )
    return FusionModel(layers=[_layer_from_doc(d) for d in doc["layers"]], config=config)
