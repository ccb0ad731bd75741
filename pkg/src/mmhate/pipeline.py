"""Shared end-to-end flows: manifest-driven extraction and dataset assembly."""

from __future__ import annotations

import csv
import os

import numpy as np

from . import signal_io
from .errors import ManifestError, ValidationError
from .features import FeatureKind, FeatureRepresentation, FeatureScaler, FrameSpec, extract_representation, fit_scaler
from .manifest import ManifestRecord, resolve_audio_path
from .text import PoolingMode, Vocabulary, embed_transcript


def load_clip(manifest_path, record: ManifestRecord, sample_rate: int = 44100) -> signal_io.AudioSignal:
    signal = signal_io.read_wav(resolve_audio_path(manifest_path, record), clip_id=record.id)
    if signal.sample_rate != sample_rate:
        signal = signal_io.resample(signal, sample_rate)
    return signal


def extract_features(
    manifest_path,
    records,
    kind: FeatureKind,
    sample_rate: int = 44100,
    frame_spec: FrameSpec = FrameSpec(),
    mid_window_ms: float = 1000.0,
    mid_step_ms: float = 1000.0,
    denoise: bool = False,
    reduction_db: float = signal_io.DEFAULT_REDUCTION_DB,
    fft_size: int = signal_io.DEFAULT_FFT_SIZE,
) -> dict:
    """Per-record fixed-size representations, keyed by id."""
    representations = {}
    for record in records:
        signal = load_clip(manifest_path, record, sample_rate)
        if denoise:
            signal = signal_io.denoise(signal, reduction_db=reduction_db, fft_size=fft_size)
        representations[record.id] = extract_representation(
            signal, kind, frame_spec, mid_window_ms=mid_window_ms, mid_step_ms=mid_step_ms
        )
    return representations


def load_labels_csv(path) -> dict:
    """id -> (valence, arousal, dominance) from a labels CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = ("id", "valence", "arousal", "dominance")
        missing = [c for c in required if reader.fieldnames is None or c not in reader.fieldnames]
        if missing:
            raise ManifestError(f"{path}: missing label column(s): {', '.join(missing)}")
        labels = {}
        for line_number, row in enumerate(reader, start=2):
            record_id = (row["id"] or "").strip()
            if not record_id:
                raise ManifestError(f"{path}:{line_number}: empty id")
            if record_id in labels:
                raise ManifestError(f"{path}:{line_number}: duplicate id {record_id!r}")
            try:
                triple = tuple(float(row[c]) for c in ("valence", "arousal", "dominance"))
            except (TypeError, ValueError):
                raise ManifestError(f"{path}:{line_number}: attributes must be real numbers")
            if any(not 0.0 <= v <= 1.0 for v in triple):
                raise ManifestError(f"{path}:{line_number}: attributes must lie in [0, 1]")
            labels[record_id] = triple
    return labels


def labels_from_manifest(records) -> dict:
    labels = {}
    for record in records:
        if record.attributes is not None:
            labels[record.id] = record.attributes
    return labels


def split_ids(records) -> dict:
    """Split name -> list of ids, preserving manifest order."""
    groups = {"train": [], "val": [], "test": []}
    for record in records:
        if record.split is None:
            raise ValidationError(f"record {record.id!r} has no split assignment")
        groups[record.split].append(record.id)
    return groups


def emotion_dataset(representations: dict, labels: dict, ids, scaler: FeatureScaler | None = None):
    """Stack (X, Y) for the given ids; scale X when a scaler is provided."""
    missing = [i for i in ids if i not in representations or i not in labels]
    if missing:
        raise ValidationError(f"missing features or labels for: {', '.join(missing[:5])}")
    x = np.stack([representations[i].values for i in ids])
    y = np.array([labels[i] for i in ids], dtype=np.float64)
    if scaler is not None:
        x = scaler.transform(x)
    return x, y


def fit_training_scaler(representations: dict, train_ids) -> FeatureScaler:
    """Scaler fitted on the training split only."""
    reps = [representations[i] for i in train_ids if i in representations]
    if not reps:
        raise ValidationError("no training representations to fit the scaler on")
    return fit_scaler(reps)


def fusion_dataset(records, text_map: dict, speech_map: dict, ids, zero_speech: bool = False):
    """Fused (X, y) rows for the given ids, text-first concatenation.

    `zero_speech` replaces the speech half with zeros (the text-only
    ablation baseline) while keeping shapes identical.
    """
    by_id = {r.id: r for r in records}
    rows = []
    labels = []
    for record_id in ids:
        if record_id not in text_map:
            raise ValidationError(f"no text embedding for id {record_id!r}")
        if record_id not in speech_map:
            raise ValidationError(f"no speech embedding for id {record_id!r}")
        text_values = np.asarray(getattr(text_map[record_id], "values", text_map[record_id]), dtype=np.float64)
        speech_values = np.asarray(getattr(speech_map[record_id], "values", speech_map[record_id]), dtype=np.float64)
        if zero_speech:
            speech_values = np.zeros_like(speech_values)
        rows.append(np.concatenate([text_values, speech_values]))
        labels.append(by_id[record_id].label)
    if not rows:
        raise ValidationError("no rows assembled for the fusion dataset")
    return np.stack(rows), np.array(labels, dtype=np.float64)


def stub_text_embeddings(records, mode: PoolingMode, vocab: Vocabulary | None = None) -> dict:
    vocab = vocab or Vocabulary.demo()
    return {record.id: embed_transcript(record.transcript, vocab, mode) for record in records}
