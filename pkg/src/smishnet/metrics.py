"""Classification metrics: confusion matrix, per-class P/R/F1, averages."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = ["LABELS", "EvalReport", "confusion_matrix", "classification_report", "format_report"]

LABELS = ("Normal", "Promo", "Smish")


def confusion_matrix(y_true: Sequence[int], y_pred: Sequence[int], n_classes: int) -> np.ndarray:
    """Count matrix with rows = true label and columns = predicted label."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise ValueError("cannot evaluate an empty dataset")
    for arr, kind in ((y_true, "true"), (y_pred, "predicted")):
        if arr.min() < 0 or arr.max() >= n_classes:
            raise ValueError(f"{kind} labels must lie in [0, {n_classes})")
    matrix = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(matrix, (y_true, y_pred), 1)
    return matrix


@dataclass(frozen=True)
class EvalReport:
    """Per-class and aggregate classification metrics.

    Zero denominators yield 0 for precision, recall, and F1.
    """

    confusion: np.ndarray  # (n, n) int counts, rows true / columns predicted
    precision: np.ndarray  # (n,)
    recall: np.ndarray  # (n,)
    f1: np.ndarray  # (n,)
    support: np.ndarray  # (n,) int
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    labels: tuple[str, ...]

    @property
    def total(self) -> int:
        return int(self.support.sum())


def classification_report(
    y_true: Sequence[int],
    y_pred: Sequence[int],
    n_classes: int = 3,
    labels: tuple[str, ...] | None = None,
) -> EvalReport:
    """Build an EvalReport from parallel true/predicted label sequences."""
    if labels is None:
        labels = LABELS if n_classes == 3 else tuple(f"class_{i}" for i in range(n_classes))
    if len(labels) != n_classes:
        raise ValueError(f"{n_classes} classes but {len(labels)} label names")
    matrix = confusion_matrix(y_true, y_pred, n_classes)

    precision = np.zeros(n_classes)
    recall = np.zeros(n_classes)
    f1 = np.zeros(n_classes)
    support = matrix.sum(axis=1)
    for c in range(n_classes):
        tp = matrix[c, c]
        fp = matrix[:, c].sum() - tp
        fn = matrix[c, :].sum() - tp
        precision[c] = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall[c] = tp / (tp + fn) if tp + fn > 0 else 0.0
        if precision[c] + recall[c] > 0:
            f1[c] = 2 * precision[c] * recall[c] / (precision[c] + recall[c])

    total = int(matrix.sum())
    weights = support / total
    return EvalReport(
        confusion=matrix,
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
        accuracy=float(np.trace(matrix) / total),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        weighted_precision=float(precision @ weights),
        weighted_recall=float(recall @ weights),
        weighted_f1=float(f1 @ weights),
        labels=tuple(labels),
    )


def format_report(report: EvalReport) -> str:
    """Render a report as a plain-text metrics table plus confusion matrix."""
    name_width = max(len("weighted avg"), max(len(n) for n in report.labels))
    lines = [f"{'':>{name_width}}  precision  recall  f1-score  support"]
    for i, name in enumerate(report.labels):
        lines.append(
            f"{name:>{name_width}}  {report.precision[i]:>9.4f}  {report.recall[i]:>6.4f}"
            f"  {report.f1[i]:>8.4f}  {report.support[i]:>7d}"
        )
    lines.append("")
    lines.append(f"{'accuracy':>{name_width}}  {report.accuracy:.4f} ({report.total} samples)")
    lines.append(
        f"{'macro avg':>{name_width}}  {report.macro_precision:>9.4f}  {report.macro_recall:>6.4f}"
        f"  {report.macro_f1:>8.4f}  {report.total:>7d}"
    )
    lines.append(
        f"{'weighted avg':>{name_width}}  {report.weighted_precision:>9.4f}"
        f"  {report.weighted_recall:>6.4f}  {report.weighted_f1:>8.4f}  {report.total:>7d}"
    )
    lines.append("")
    lines.append("confusion matrix (rows = true, columns = predicted)")
    header = "  ".join(f"{n:>8}" for n in ("",) + report.labels)
    lines.append(header)
    for i, name in enumerate(report.labels):
        row = "  ".join(f"{report.confusion[i, j]:>8d}" for j in range(len(report.labels)))
        lines.append(f"{name:>8}  {row}")
    return "\n".join(lines) + "\n"
