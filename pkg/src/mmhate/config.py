"""Flat key=value run configuration with CLI > file > defaults precedence."""

from __future__ import annotations

import os

from .emotion import MtlConfig
from .errors import ConfigError
from .fusion import FusionConfig

DEFAULTS = {
    "seed": "0",
    "features.kind": "f2",
    "features.sample_rate": "44100",
    "features.window_ms": "50",
    "features.step_ms": "50",
    "features.mid_window_ms": "1000",
    "features.mid_step_ms": "1000",
    "denoise.fft_size": "2048",
    "denoise.reduction_db": "12.0",
    "denoise.sensitivity": "1.5",
    "denoise.noise_seconds": "0.5",
    "text.provider": "stub",
    "text.mode": "cls",
    # empty mtl.* values fall back to the per-kind presets
    "mtl.shared_sizes": "",
    "mtl.head_size": "170",
    "mtl.dropout": "0.2",
    "mtl.alpha": "",
    "mtl.beta": "",
    "mtl.gamma": "",
    "mtl.learning_rate": "",
    "mtl.learning_decay": "",
    "mtl.l2": "",
    "mtl.batch_size": "",
    "mtl.max_epochs": "",
    "fusion.hidden_sizes": "512,128,32",
    "fusion.dropout": "0.3,0.3",
    "fusion.l2": "1e-5",
    "fusion.threshold": "0.7",
    "fusion.learning_rate": "1e-4",
    "fusion.learning_decay": "0.99",
    "fusion.patience": "10",
    "fusion.batch_size": "32",
    "fusion.max_epochs": "200",
}


def load_config_file(path) -> dict:
    """Parse `key = value` lines; '#' starts a comment."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    values = {}
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{line_number}: expected key = value")
            key, value = (part.strip() for part in stripped.split("=", 1))
            if key not in DEFAULTS:
                raise ConfigError(f"{path}:{line_number}: unknown key {key!r}")
            values[key] = value
    return values


def resolve(file_values: dict | None = None, overrides: dict | None = None) -> dict:
    """Merge defaults, file values, and CLI overrides (highest precedence last)."""
    merged = dict(DEFAULTS)
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            if value is not None:
                merged[key] = str(value)
    return merged


def format_config(cfg: dict) -> str:
    return "\n".join(f"{key} = {cfg[key]}" for key in sorted(cfg))


def _get_float(cfg, key) -> float:
    try:
        return float(cfg[key])
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {cfg[key]!r}")


def _get_int(cfg, key) -> int:
    try:
        return int(cfg[key])
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {cfg[key]!r}")


def _get_int_tuple(cfg, key) -> tuple:
    try:
        return tuple(int(part) for part in cfg[key].split(","))
    except ValueError:
        raise ConfigError(f"{key} must be comma-separated integers, got {cfg[key]!r}")


def seed_of(cfg: dict) -> int:
    return _get_int(cfg, "seed")


def feature_kind_of(cfg: dict) -> str:
    kind = cfg["features.kind"]
    if kind not in ("f1", "f2"):
        raise ConfigError(f"features.kind must be f1 or f2, got {kind!r}")
    return kind


def mtl_config(cfg: dict) -> MtlConfig:
    """MtlConfig from the merged run config; empty keys use the kind preset."""
    kind = feature_kind_of(cfg)
    preset = MtlConfig.for_kind(kind)
    loss_weights = tuple(
        _get_float(cfg, key) if cfg[key] else default
        for key, default in zip(("mtl.alpha", "mtl.beta", "mtl.gamma"), preset.loss_weights)
    )
    return MtlConfig(
        shared_layer_sizes=_get_int_tuple(cfg, "mtl.shared_sizes") if cfg["mtl.shared_sizes"] else preset.shared_layer_sizes,
        head_size=_get_int(cfg, "mtl.head_size"),
        dropout_rate=_get_float(cfg, "mtl.dropout"),
        loss_weights=loss_weights,
        learning_rate=_get_float(cfg, "mtl.learning_rate") if cfg["mtl.learning_rate"] else preset.learning_rate,
        learning_decay=_get_float(cfg, "mtl.learning_decay") if cfg["mtl.learning_decay"] else preset.learning_decay,
        l2_coefficient=_get_float(cfg, "mtl.l2") if cfg["mtl.l2"] else preset.l2_coefficient,
        batch_size=_get_int(cfg, "mtl.batch_size") if cfg["mtl.batch_size"] else preset.batch_size,
        max_epochs=_get_int(cfg, "mtl.max_epochs") if cfg["mtl.max_epochs"] else preset.max_epochs,
        rng_seed=seed_of(cfg),
    )


def fusion_config(cfg: dict) -> FusionConfig:
    dropout = tuple(float(part) for part in cfg["fusion.dropout"].split(","))
    return FusionConfig(
        hidden_sizes=_get_int_tuple(cfg, "fusion.hidden_sizes"),
        dropout_rates=dropout,
        l2_coefficient=_get_float(cfg, "fusion.l2"),
        threshold=_get_float(cfg, "fusion.threshold"),
        learning_rate=_get_float(cfg, "fusion.learning_rate"),
        learning_decay=_get_float(cfg, "fusion.learning_decay"),
        patience=_get_int(cfg, "fusion.patience"),
        batch_size=_get_int(cfg, "fusion.batch_size"),
        max_epochs=_get_int(cfg, "fusion.max_epochs"),
        rng_seed=seed_of(cfg),
    )
