"""Classification and regression metrics plus report rendering.

Macro scores follow the mean-of-per-class convention: precision, recall,
and F1 are computed for the hate and not-hate classes separately and then
averaged with equal weight. Zero-denominator cases score 0 so degenerate
classifiers still produce comparable tables.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .fusion import Label

CSV_COLUMNS = ("run_id", "model_kind", "split", "precision", "recall", "f1", "rmse_val", "rmse_aro", "rmse_dom")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with HateSpeech as the positive class."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValidationError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _as_binary(values) -> np.ndarray:
    out = np.array([v.value if isinstance(v, Label) else int(v) for v in values], dtype=np.int64)
    if out.size and not np.all(np.isin(out, (0, 1))):
        raise ValidationError("labels must be 0/1 or Label values")
    return out


def confusion(predictions, targets) -> ConfusionMatrix:
    pred = _as_binary(predictions)
    true = _as_binary(targets)
    if pred.size != true.size:
        raise ValidationError(f"length mismatch: {pred.size} predictions vs {true.size} targets")
    if pred.size == 0:
        raise ValidationError("need at least one sample")
    return ConfusionMatrix(
        tp=int(np.sum((pred == 1) & (true == 1))),
        fp=int(np.sum((pred == 1) & (true == 0))),
        tn=int(np.sum((pred == 0) & (true == 0))),
        fn=int(np.sum((pred == 0) & (true == 1))),
    )


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MacroScores:
    precision: float
    recall: float
    f1: float
    per_class: dict


def _ratio(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator else 0.0


def _class_scores(tp: int, fp: int, fn: int) -> ClassScores:
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ClassScores(precision=precision, recall=recall, f1=f1)


def macro_scores(cm: ConfusionMatrix) -> MacroScores:
    """Unweighted mean of the per-class precision/recall/F1."""
    if cm.total < 1:
        raise ValidationError("confusion matrix is empty")
    positive = _class_scores(cm.tp, cm.fp, cm.fn)
    negative = _class_scores(cm.tn, cm.fn, cm.fp)
    return MacroScores(
        precision=(positive.precision + negative.precision) / 2.0,
        recall=(positive.recall + negative.recall) / 2.0,
        f1=(positive.f1 + negative.f1) / 2.0,
        per_class={"hate_speech": positive, "not_hate_speech": negative},
    )


@dataclass(frozen=True)
class ReportEntry:
    run_id: str
    model_kind: str
    split: str
    macro: MacroScores | None = None
    rmse: tuple | None = None  # (valence, arousal, dominance)

    def __post_init__(self):
        if self.macro is None and self.rmse is None:
            raise ValidationError(f"report entry {self.run_id!r} carries no metrics")
        if self.rmse is not None and len(self.rmse) != 3:
            raise ValidationError("rmse must be a (valence, arousal, dominance) triple")


def _pct(value: float) -> str:
    return f"{100.0 * value:.2f}"


def render_report(entries) -> tuple:
    """Fixed-width tables plus machine-readable CSV rows.

    Classification scores render as percentages to two decimals, RMSEs to
    four decimals; the CSV stores raw fractions. Returns (text, csv_text).
    """
    entries = list(entries)
    if not entries:
        raise ValidationError("cannot render a report without metrics")

    lines = []
    classification = [e for e in entries if e.macro is not None]
    regression = [e for e in entries if e.rmse is not None]
    if classification:
        lines.append(f"{'run':<24}{'model':<12}{'split':<8}{'P':>8}{'R':>8}{'F1':>8}")
        for e in classification:
            lines.append(
                f"{e.run_id:<24}{e.model_kind:<12}{e.split:<8}"
                f"{_pct(e.macro.precision):>8}{_pct(e.macro.recall):>8}{_pct(e.macro.f1):>8}"
            )
    if classification and regression:
        lines.append("")
    if regression:
        lines.append(f"{'run':<24}{'model':<12}{'split':<8}{'Val RMSE':>10}{'Aro RMSE':>10}{'Dom RMSE':>10}")
        for e in regression:
            lines.append(
                f"{e.run_id:<24}{e.model_kind:<12}{e.split:<8}"
                f"{e.rmse[0]:>10.4f}{e.rmse[1]:>10.4f}{e.rmse[2]:>10.4f}"
            )
    text = "\n".join(lines)

    buffer = io.StringIO()
    buffer.write(",".join(CSV_COLUMNS) + "\n")
    for e in entries:
        row = [e.run_id, e.model_kind, e.split]
        if e.macro is not None:
            row += [f"{e.macro.precision:.6f}", f"{e.macro.recall:.6f}", f"{e.macro.f1:.6f}"]
        else:
            row += ["", "", ""]
        if e.rmse is not None:
            row += [f"{v:.6f}" for v in e.rmse]
        else:
            row += ["", "", ""]
        buffer.write(",".join(row) + "\n")
    return text, buffer.getvalue()


def parse_report_csv(path) -> list:
    """Read rows previously written by render_report back into ReportEntry."""
    import csv

    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in CSV_COLUMNS if reader.fieldnames is None or c not in reader.fieldnames]
        if missing:
            raise ValidationError(f"{path}: missing report column(s): {', '.join(missing)}")
        for row in reader:
            macro = None
            if row["precision"]:
                scores = {
                    "precision": float(row["precision"]),
                    "recall": float(row["recall"]),
                    "f1": float(row["f1"]),
                }
                macro = MacroScores(per_class={}, **scores)
            rmse = None
            if row["rmse_val"]:
                rmse = (float(row["rmse_val"]), float(row["rmse_aro"]), float(row["rmse_dom"]))
            entries.append(
                ReportEntry(run_id=row["run_id"], model_kind=row["model_kind"], split=row["split"], macro=macro, rmse=rmse)
            )
    return entries
