"""Classification and numeric-prediction metrics.

accuracy, balanced accuracy (mean per-class recall over classes present in
gold), macro-F1 (mean per-class F1 over gold classes, 0 when precision and
recall are both 0), and normalized log distance for month-valued numeric
predictions. All metrics are pure and permutation-invariant.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "LabeledPrediction",
    "TermPrediction",
    "accuracy",
    "balanced_accuracy",
    "macro_f1",
    "normalized_log_distance",
]


@dataclass(frozen=True)
class LabeledPrediction:
    gold: str
    pred: str

    def __post_init__(self) -> None:
        if not self.gold or not self.pred:
            raise ValueError("labels must be non-empty")


@dataclass(frozen=True)
class TermPrediction:
    """Gold and predicted durations in months; both finite and >= 0."""

    gold_months: float
    pred_months: float

    def __post_init__(self) -> None:
        for name in ("gold_months", "pred_months"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {value}")


def _require_nonempty(preds: Sequence) -> None:
    if not preds:
        raise ValueError("empty prediction list")


def accuracy(preds: Sequence[LabeledPrediction]) -> float:
    _require_nonempty(preds)
    return sum(1 for p in preds if p.gold == p.pred) / len(preds)


def balanced_accuracy(preds: Sequence[LabeledPrediction]) -> float:
    _require_nonempty(preds)
    gold_counts = Counter(p.gold for p in preds)
    correct_counts = Counter(p.gold for p in preds if p.gold == p.pred)
    recalls = [correct_counts[cls] / total for cls, total in gold_counts.items()]
    return sum(recalls) / len(recalls)


def macro_f1(preds: Sequence[LabeledPrediction]) -> float:
    _require_nonempty(preds)
    gold_counts = Counter(p.gold for p in preds)
    pred_counts = Counter(p.pred for p in preds)
    tp = Counter(p.gold for p in preds if p.gold == p.pred)

    scores = []
    for cls, gold_total in gold_counts.items():
        true_pos = tp[cls]
        pred_total = pred_counts[cls]
        precision = true_pos / pred_total if pred_total else 0.0
        recall = true_pos / gold_total
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        scores.append(f1)
    return sum(scores) / len(scores)


def normalized_log_distance(preds: Sequence[TermPrediction], cap_months: float) -> float:
    """Mean of per-item scores 1 - min(1, |ln(1+pred) - ln(1+gold)| / ln(1+cap)).

    1.0 iff every prediction equals its gold; 0.0 at the extreme mismatch
    (e.g. pred 0 against gold == cap). Symmetric in (pred, gold) per item.
    """
    _require_nonempty(preds)
    if not (cap_months > 0):
        raise ValueError(f"cap_months must be positive, got {cap_months}")
    denom = math.log1p(cap_months)
    scores = []
    for p in preds:
        distance = abs(math.log1p(p.pred_months) - math.log1p(p.gold_months))
        scores.append(1.0 - min(1.0, distance / denom))
    return sum(scores) / len(scores)
