"""Classification metrics: confusion matrix, per-class
precision/recall/F1 with support, and overall accuracy.

Zero denominators yield 0 for the affected metric and are recorded as
warnings instead of raising, so reports stay total.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMatrix, LabelOutOfRange, LengthMismatch


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (C, C) int, rows = true class, cols = predicted
    class_names: list[str]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class EvaluationReport:
    class_names: list[str]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    confusion: ConfusionMatrix
    warnings: list[str] = field(default_factory=list)


def confusion(truth, predicted, num_classes: int, class_names: list[str] | None = None) -> ConfusionMatrix:
    truth = np.asarray(truth, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if truth.shape != predicted.shape or truth.ndim != 1:
        raise LengthMismatch(f"{truth.shape} truth vs {predicted.shape} predicted")
    if len(truth) and (truth.min() < 0 or predicted.min() < 0
                       or truth.max() >= num_classes or predicted.max() >= num_classes):
        raise LabelOutOfRange(f"labels must lie in [0, {num_classes})")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (truth, predicted), 1)
    if class_names is None:
        class_names = [str(i) for i in range(num_classes)]
    return ConfusionMatrix(counts=counts, class_names=list(class_names))


def report(cm: ConfusionMatrix) -> EvaluationReport:
    counts = cm.counts
    total = cm.total
    if total == 0:
        raise EmptyMatrix("no samples to evaluate")
    diag = np.diag(counts).astype(np.float64)
    col_sums = counts.sum(axis=0).astype(np.float64)
    row_sums = counts.sum(axis=1).astype(np.float64)

    warnings = []
    precision = np.zeros(len(counts))
    recall = np.zeros(len(counts))
    for c in range(len(counts)):
        if col_sums[c] > 0:
            precision[c] = diag[c] / col_sums[c]
        else:
            warnings.append(f"class {cm.class_names[c]}: no predictions, precision set to 0")
        if row_sums[c] > 0:
            recall[c] = diag[c] / row_sums[c]
        else:
            warnings.append(f"class {cm.class_names[c]}: no true samples, recall set to 0")
    pr = precision + recall
    f1 = np.where(pr > 0, 2.0 * precision * recall / np.where(pr > 0, pr, 1.0), 0.0)

    return EvaluationReport(
        class_names=list(cm.class_names),
        precision=precision,
        recall=recall,
        f1=f1,
        support=counts.sum(axis=1),
        accuracy=float(diag.sum()) / total,
        confusion=cm,
        warnings=warnings,
    )


def report_to_dict(rep: EvaluationReport) -> dict:
    return {
        "accuracy": rep.accuracy,
        "classes": [
            {
                "name": rep.class_names[c],
                "precision": float(rep.precision[c]),
                "recall": float(rep.recall[c]),
                "f1": float(rep.f1[c]),
                "support": int(rep.support[c]),
            }
            for c in range(len(rep.class_names))
        ],
        "confusion": rep.confusion.counts.tolist(),
        "warnings": list(rep.warnings),
    }


def format_report_text(rep: EvaluationReport) -> str:
    """Aligned plain-text rendering with two-decimal metrics."""
    name_width = max(len("Class"), *(len(n) for n in rep.class_names))
    lines = [f"{'Class':<{name_width}}  {'P':>5}  {'R':>5}  {'F1':>5}  {'#':>6}"]
    for c, name in enumerate(rep.class_names):
        lines.append(
            f"{name:<{name_width}}  {rep.precision[c]:>5.2f}  {rep.recall[c]:>5.2f}"
            f"  {rep.f1[c]:>5.2f}  {int(rep.support[c]):>6d}"
        )
    lines.append(f"Accuracy: {100.0 * rep.accuracy:.2f}%")
    return "\n".join(lines)
