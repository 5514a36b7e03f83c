"""Confusion-matrix bookkeeping and retrieval scores.

Precision, recall and the F-measure can be undefined on imbalanced
retrieval runs (e.g. a classifier that predicts no document to be
relevant has no precision). Undefined is kept as a first-class state
(``None``) so that downstream statistics stay honest; only the
reporting layer renders it as 0 for plotting.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Confusion:
    """Counts of true/false positives/negatives over a set of documents."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise ValueError(f"negative count for {name}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class Scores:
    """Precision / recall / F1 with ``None`` marking an undefined value."""

    precision: float | None
    recall: float | None
    f1: float | None

    def as_zero(self) -> "Scores":
        """Render undefined values as 0 (the plotting convention)."""
        z = lambda v: 0.0 if v is None else v
        return Scores(z(self.precision), z(self.recall), z(self.f1))

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


class KeySetMismatch(ValueError):
    """Prediction and truth mappings cover different documents."""


def confusion(pred: dict, truth: dict) -> Confusion:
    """Tally a confusion matrix from doc-id -> {0,1} mappings.

    Both mappings must cover exactly the same document ids.
    """
    if pred.keys() != truth.keys():
        missing = truth.keys() - pred.keys()
        extra = pred.keys() - truth.keys()
        raise KeySetMismatch(
            f"prediction/truth key sets differ (missing={len(missing)}, extra={len(extra)})"
        )
    tp = fp = fn = tn = 0
    for doc_id, p in pred.items():
        t = truth[doc_id]
        if p and t:
            tp += 1
        elif p and not t:
            fp += 1
        elif not p and t:
            fn += 1
        else:
            tn += 1
    return Confusion(tp, fp, fn, tn)


def precision(c: Confusion) -> float | None:
    """TP / (TP + FP); undefined when nothing is predicted positive."""
    denom = c.tp + c.fp
    if denom == 0:
        return None
    return c.tp / denom


def recall(c: Confusion) -> float | None:
    """TP / (TP + FN); undefined when there are no truly positive docs."""
    denom = c.tp + c.fn
    if denom == 0:
        return None
    return c.tp / denom


def f_omega(c: Confusion, omega: float = 1.0) -> float | None:
    """Weighted harmonic mean of precision and recall.

    F_w = (w^2 + 1) * P * R / (w^2 * P + R). omega > 1 weights recall
    higher, omega < 1 weights precision higher, omega = 1 is F1.
    Undefined whenever precision or recall is undefined, or both are 0.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    p = precision(c)
    r = recall(c)
    if p is None or r is None:
        return None
    denom = omega * omega * p + r
    if denom == 0.0:
        return None
    return (omega * omega + 1.0) * p * r / denom


def scores(c: Confusion, omega: float = 1.0) -> Scores:
    """Bundle precision, recall and F_omega for one confusion matrix."""
    return Scores(precision(c), recall(c), f_omega(c, omega))
