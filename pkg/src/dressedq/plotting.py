"""Figure rendering for training curves and confusion matrices.

Figures are written as SVG with a fixed hash salt and no timestamp metadata,
so reruns produce byte-identical files.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .training import EpochRecord  # noqa: E402

_SVG_METADATA = {"Date": None}


def _apply_determinism() -> None:
    matplotlib.rcParams["svg.hashsalt"] = "dressedq"


def plot_history(history: list[EpochRecord], path: str | Path) -> None:
    """Two-panel figure: loss curves on the left, accuracy on the right,
    train and validation series in each panel.
    """
    if not history:
        raise ValueError("history is empty, nothing to plot")
    _apply_determinism()
    epochs = [rec.epoch for rec in history]
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(10, 4))
    ax_loss.plot(epochs, [rec.train_loss for rec in history], label="train")
    ax_loss.plot(epochs, [rec.val_loss for rec in history], label="validation")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("cross-entropy loss")
    ax_loss.set_title("Model loss")
    ax_loss.legend()
    ax_acc.plot(epochs, [rec.train_accuracy for rec in history], label="train")
    ax_acc.plot(epochs, [rec.val_accuracy for rec in history],
                label="validation")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy")
    ax_acc.set_title("Model accuracy")
    ax_acc.set_ylim(0.0, 1.05)
    ax_acc.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)


def plot_confusion(matrix, class_names: list[str], path: str | Path) -> None:
    """Annotated heatmap of a confusion matrix (rows true, columns predicted)."""
    n = len(class_names)
    if matrix.shape != (n, n):
        raise ValueError(
            f"matrix shape {matrix.shape} does not match {n} class names")
    _apply_determinism()
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(matrix, cmap="Blues")
    ax.set_xticks(range(n), class_names, rotation=45, ha="right")
    ax.set_yticks(range(n), class_names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title("Confusion matrix")
    threshold = matrix.max() / 2 if matrix.max() > 0 else 0
    for i in range(n):
        for j in range(n):
            color = "white" if matrix[i, j] > threshold else "black"
            ax.text(j, i, str(int(matrix[i, j])), ha="center", va="center",
                    color=color)
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)
