"""Matplotlib figures rendered next to the delimited outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_training_curves(trace, path, title: str = "training") -> None:
    """Train/validation loss per epoch from an EpochStats-like trace."""
    epochs = [s.epoch for s in trace]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, [s.train_loss for s in trace], label="train")
    ax.plot(epochs, [s.val_loss for s in trace], label="validation")
    best = min(trace, key=lambda s: s.val_loss)
    ax.axvline(best.epoch, color="gray", linestyle=":", linewidth=1, label=f"best epoch {best.epoch}")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_metric_bars(entries, path) -> None:
    """Grouped bars of macro P/R/F1 (percent) and RMSE per report entry."""
    classification = [e for e in entries if e.macro is not None]
    regression = [e for e in entries if e.rmse is not None]
    n_axes = (1 if classification else 0) + (1 if regression else 0)
    if n_axes == 0:
        raise ValueError("no metrics to plot")
    fig, axes = plt.subplots(1, n_axes, figsize=(6 * n_axes, 4), squeeze=False)
    col = 0
    if classification:
        ax = axes[0][col]
        col += 1
        labels = [f"{e.run_id}/{e.split}" for e in classification]
        x = np.arange(len(labels))
        width = 0.25
        ax.bar(x - width, [100 * e.macro.precision for e in classification], width, label="P")
        ax.bar(x, [100 * e.macro.recall for e in classification], width, label="R")
        ax.bar(x + width, [100 * e.macro.f1 for e in classification], width, label="F1")
        ax.set_xticks(x, labels, rotation=30, ha="right")
        ax.set_ylabel("macro score (%)")
        ax.set_ylim(0, 100)
        ax.legend()
    if regression:
        ax = axes[0][col]
        labels = [f"{e.run_id}/{e.split}" for e in regression]
        x = np.arange(len(labels))
        width = 0.25
        ax.bar(x - width, [e.rmse[0] for e in regression], width, label="valence")
        ax.bar(x, [e.rmse[1] for e in regression], width, label="arousal")
        ax.bar(x + width, [e.rmse[2] for e in regression], width, label="dominance")
        ax.set_xticks(x, labels, rotation=30, ha="right")
        ax.set_ylabel("RMSE")
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_confusion_heatmap(cm, path, title: str = "confusion") -> None:
    counts = np.array([[cm.tn, cm.fp], [cm.fn, cm.tp]], dtype=float)
    fig, ax = plt.subplots(figsize=(4, 3.5))
    image = ax.imshow(counts, cmap="Blues")
    for (row, col), value in np.ndenumerate(counts):
        ax.text(col, row, int(value), ha="center", va="center",
                color="white" if value > counts.max() / 2 else "black")
    ax.set_xticks([0, 1], ["pred not-hate", "pred hate"])
    ax.set_yticks([0, 1], ["true not-hate", "true hate"])
    ax.set_title(title)
    fig.colorbar(image, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
