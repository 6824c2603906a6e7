"""Confusion matrix and one-vs-rest evaluation metrics.

Rows of the matrix are true classes, columns are predicted classes. Accuracy
is global (trace / total); precision, recall, F1, and specificity are computed
per class one-vs-rest and macro-averaged. Any 0/0 metric is reported as 0 with
its degenerate flag set.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

METRIC_NAMES = ("precision", "recall", "f1", "specificity")


@dataclass
class MetricsReport:
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    specificity: np.ndarray
    degenerate: dict[str, np.ndarray]  # metric name -> per-class 0/0 flags
    macro: dict[str, float]

    @property
    def n_classes(self) -> int:
        return self.precision.shape[0]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class": {
                name: list(getattr(self, name)) for name in METRIC_NAMES
            },
            "degenerate": {
                name: [bool(x) for x in flags]
                for name, flags in self.degenerate.items()
            },
            "macro": dict(self.macro),
        }


def confusion(true_labels, predicted_labels, n_classes: int) -> np.ndarray:
    """Count matrix: cell [t][p] = records with true class t predicted as p."""
    true = np.asarray(true_labels, dtype=int).ravel()
    pred = np.asarray(predicted_labels, dtype=int).ravel()
    if true.size != pred.size:
        raise ValueError(
            f"label/prediction length mismatch: {true.size} vs {pred.size}")
    matrix = np.zeros((n_classes, n_classes), dtype=int)
    for t, p in zip(true, pred):
        if not (0 <= t < n_classes and 0 <= p < n_classes):
            raise ValueError(f"label pair ({t}, {p}) out of range [0, {n_classes})")
        matrix[t, p] += 1
    return matrix


def _ratio(num: float, den: float) -> tuple[float, bool]:
    if den == 0:
        return 0.0, True
    return num / den, False


def report(matrix: np.ndarray) -> MetricsReport:
    """All metrics from a confusion matrix; raises on an empty matrix."""
    m = np.asarray(matrix, dtype=int)
    total = int(m.sum())
    if total == 0:
        raise ValueError("confusion matrix has no records")
    c = m.shape[0]

    precision = np.zeros(c)
    recall = np.zeros(c)
    f1 = np.zeros(c)
    specificity = np.zeros(c)
    degenerate = {name: np.zeros(c, dtype=bool) for name in METRIC_NAMES}

    for k in range(c):
        tp = int(m[k, k])
        fn = int(m[k].sum()) - tp
        fp = int(m[:, k].sum()) - tp
        tn = total - tp - fn - fp
        precision[k], degenerate["precision"][k] = _ratio(tp, tp + fp)
        recall[k], degenerate["recall"][k] = _ratio(tp, tp + fn)
        f1[k], degenerate["f1"][k] = _ratio(
            2.0 * precision[k] * recall[k], precision[k] + recall[k])
        specificity[k], degenerate["specificity"][k] = _ratio(tn, tn + fp)

    per_class = {"precision": precision, "recall": recall,
                 "f1": f1, "specificity": specificity}
    macro = {name: float(values.mean()) for name, values in per_class.items()}
    return MetricsReport(
        accuracy=float(np.trace(m)) / total,
        degenerate=degenerate,
        macro=macro,
        **per_class,
    )


def write_report(rep: MetricsReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(rep.to_dict(), indent=2) + "\n")


def write_confusion(matrix: np.ndarray, path: str | Path) -> None:
    lines = [",".join(str(int(x)) for x in row) for row in np.asarray(matrix)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_confusion(path: str | Path) -> np.ndarray:
    rows = [line.split(",") for line in Path(path).read_text().splitlines() if line]
    return np.array([[int(x) for x in row] for row in rows], dtype=int)
