"""Evaluation metrics: confusion matrix, macro P/R/F, miss rate, length buckets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMatrix, LengthMismatch, NoPositives
from .labeler import QeLabel
from .subtitles import tokenize

LABEL_ORDER = (QeLabel.GOOD, QeLabel.LOOSE, QeLabel.BAD)
_INDEX = {l: i for i, l in enumerate(LABEL_ORDER)}

LENGTH_BUCKETS = ((1, 5), (6, 10), (11, 15), (16, 20), (21, 25))


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (3, 3), rows = truth, cols = prediction

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class MetricsReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_label_accuracy: dict[QeLabel, float]
    per_length_accuracy: dict[tuple[int, int], float] | None = None

    def table(self) -> str:
        lines = [
            f"{'Accuracy':>10s} {'Precision':>10s} {'Recall':>10s} {'F-Score':>10s}",
            f"{100 * self.accuracy:>10.2f} {100 * self.macro_precision:>10.2f} "
            f"{100 * self.macro_recall:>10.2f} {100 * self.macro_f1:>10.2f}",
            "",
            "Per-label accuracy:",
        ]
        for label, acc in self.per_label_accuracy.items():
            lines.append(f"  {label.value:>6s} {100 * acc:>7.2f}")
        if self.per_length_accuracy:
            lines.append("")
            lines.append("Per-length accuracy (target tokens):")
            for (lo, hi), acc in sorted(self.per_length_accuracy.items()):
                lines.append(f"  {lo:>2d}-{hi:<2d} {100 * acc:>7.2f}")
        return "\n".join(lines)


def confusion(pred: list[QeLabel], truth: list[QeLabel]) -> ConfusionMatrix:
    if len(pred) != len(truth):
        raise LengthMismatch(f"{len(pred)} predictions vs {len(truth)} truths")
    if not pred:
        raise EmptyMatrix("no samples")
    counts = np.zeros((3, 3), dtype=np.int64)
    for p, t in zip(pred, truth):
        counts[_INDEX[t], _INDEX[p]] += 1
    return ConfusionMatrix(counts)


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy plus macro-averaged precision/recall/F1; 0/0 counts as 0."""
    c = cm.counts
    total = c.sum()
    if total == 0:
        raise EmptyMatrix("empty confusion matrix")
    accuracy = float(np.trace(c) / total)
    precisions, recalls, f1s, per_label = [], [], [], {}
    for i, label in enumerate(LABEL_ORDER):
        tp = c[i, i]
        pred_i = c[:, i].sum()
        truth_i = c[i, :].sum()
        p = tp / pred_i if pred_i else 0.0
        r = tp / truth_i if truth_i else 0.0
        f = 2 * p * r / (p + r) if (p + r) else 0.0
        precisions.append(p)
        recalls.append(r)
        f1s.append(f)
        per_label[label] = float(r)
    return MetricsReport(
        accuracy=accuracy,
        macro_precision=float(np.mean(precisions)),
        macro_recall=float(np.mean(recalls)),
        macro_f1=float(np.mean(f1s)),
        per_label_accuracy=per_label,
    )


def miss_rate(pred: list[QeLabel], truth: list[QeLabel] | None = None) -> float:
    """False negative rate on a positives-only set: fraction predicted Bad.

    When truth labels are given they must all be Good or Loose.
    """
    if truth is not None and any(t == QeLabel.BAD for t in truth):
        raise NoPositives("truth set contains Bad labels; not a positives-only corpus")
    if not pred:
        raise NoPositives("no positive samples")
    return sum(1 for p in pred if p == QeLabel.BAD) / len(pred)


def length_buckets(target_texts: list[str], pred: list[QeLabel],
                   truth: list[QeLabel]) -> dict[tuple[int, int], float]:
    """Accuracy bucketed by target token count; empty buckets are absent."""
    if not (len(target_texts) == len(pred) == len(truth)):
        raise LengthMismatch("inputs must have equal lengths")
    hits: dict[tuple[int, int], list[int]] = {}
    for text, p, t in zip(target_texts, pred, truth):
        n = len(tokenize(text))
        for lo, hi in LENGTH_BUCKETS:
            if lo <= n <= hi:
                hits.setdefault((lo, hi), []).append(int(p == t))
                break
    return {bucket: sum(v) / len(v) for bucket, v in hits.items()}
