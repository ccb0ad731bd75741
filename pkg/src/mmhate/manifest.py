"""Dataset manifests: CSV loading/saving, validation, and split assignment."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, replace

import numpy as np

from .errors import ManifestError, ValidationError

REQUIRED_COLUMNS = ("id", "audio_path", "transcript", "label", "split")
OPTIONAL_COLUMNS = ("valence", "arousal", "dominance")
SPLITS = ("train", "val", "test")
DEFAULT_SPLIT_RATIOS = (0.8, 0.1, 0.1)


@dataclass(frozen=True)
class ManifestRecord:
    id: str
    audio_path: str
    transcript: str
    label: int
    split: str | None = None
    valence: float | None = None
    arousal: float | None = None
    dominance: float | None = None

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ManifestError(f"label must be 0 or 1, got {self.label!r}")
        if self.split is not None and self.split not in SPLITS:
            raise ManifestError(f"split must be one of {SPLITS}, got {self.split!r}")
        for name in OPTIONAL_COLUMNS:
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ManifestError(f"{name} must be in [0, 1], got {value}")

    @property
    def attributes(self):
        if self.valence is None or self.arousal is None or self.dominance is None:
            return None
        return (self.valence, self.arousal, self.dominance)


def _parse_row(row: dict, line_number: int) -> ManifestRecord:
    label_text = (row.get("label") or "").strip()
    if label_text not in ("0", "1"):
        raise ManifestError(f"row {line_number}: label must be 0 or 1, got {label_text!r}")
    split_text = (row.get("split") or "").strip()
    if split_text and split_text not in SPLITS:
        raise ManifestError(f"row {line_number}: split must be one of {SPLITS}, got {split_text!r}")
    values = {}
    for name in OPTIONAL_COLUMNS:
        cell = (row.get(name) or "").strip()
        if not cell:
            values[name] = None
            continue
        try:
            parsed = float(cell)
        except ValueError:
            raise ManifestError(f"row {line_number}: {name} must be a real number, got {cell!r}")
        if not 0.0 <= parsed <= 1.0:
            raise ManifestError(f"row {line_number}: {name} must be in [0, 1], got {parsed}")
        values[name] = parsed
    record_id = (row.get("id") or "").strip()
    if not record_id:
        raise ManifestError(f"row {line_number}: empty id")
    return ManifestRecord(
        id=record_id,
        audio_path=(row.get("audio_path") or "").strip(),
        transcript=row.get("transcript") or "",
        label=int(label_text),
        split=split_text or None,
        **values,
    )


def load_manifest(path, require_audio: bool = False) -> list:
    """Load and validate a manifest CSV; duplicate ids and bad values are rejected."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ManifestError(f"{path}: empty manifest")
        missing = [c for c in REQUIRED_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise ManifestError(f"{path}: missing required column(s): {', '.join(missing)}")
        records = []
        seen = set()
        base_dir = os.path.dirname(os.fspath(path))
        for line_number, row in enumerate(reader, start=2):
            record = _parse_row(row, line_number)
            if record.id in seen:
                raise ManifestError(f"row {line_number}: duplicate id {record.id!r}")
            seen.add(record.id)
            if require_audio:
                resolved = record.audio_path
                if not os.path.isabs(resolved):
                    resolved = os.path.join(base_dir, resolved)
                if not os.path.exists(resolved):
                    raise ManifestError(f"row {line_number}: audio file not found: {record.audio_path}")
            records.append(record)
    return records


def resolve_audio_path(manifest_path, record: ManifestRecord) -> str:
    if os.path.isabs(record.audio_path):
        return record.audio_path
    return os.path.join(os.path.dirname(os.fspath(manifest_path)), record.audio_path)


def save_manifest(records, path) -> None:
    """Write records back to CSV; floats use shortest round-trip formatting."""
    columns = REQUIRED_COLUMNS + OPTIONAL_COLUMNS
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for record in records:
            row = [record.id, record.audio_path, record.transcript, record.label, record.split or ""]
            for name in OPTIONAL_COLUMNS:
                value = getattr(record, name)
                row.append("" if value is None else repr(value))
            writer.writerow(row)


def split_labels(n: int, ratios=DEFAULT_SPLIT_RATIOS, seed: int = 0) -> list:
    """Split name per index after a seeded shuffle.

    Validation and test counts are floors of their ratios; the remainder
    goes to train.
    """
    if n < 3:
        raise ValidationError(f"need at least 3 records to split, got {n}")
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError("ratios must be three values summing to 1")
    n_val = int(ratios[1] * n)
    n_test = int(ratios[2] * n)
    n_train = n - n_val - n_test
    order = np.random.Generator(np.random.PCG64(seed)).permutation(n)
    labels = [None] * n
    for rank, index in enumerate(order):
        if rank < n_train:
            labels[index] = "train"
        elif rank < n_train + n_val:
            labels[index] = "val"
        else:
            labels[index] = "test"
    return labels


def split_dataset(records, ratios=DEFAULT_SPLIT_RATIOS, seed: int = 0) -> list:
    """Seeded proportional train/val/test assignment (remainder to train).

    Records must not already carry a split.
    """
    records = list(records)
    if any(r.split is not None for r in records):
        raise ValidationError("records already carry split assignments")
    labels = split_labels(len(records), ratios, seed)
    return [replace(record, split=label) for record, label in zip(records, labels)]
