"""Classification metrics: AUC, accuracy, balanced accuracy, sensitivity,
specificity, F1, precision.

Balanced accuracy is the primary measure; on single-class batches the AUC is
undefined (None) and balanced accuracy falls back to the recall of the class
that is present, with the record flagged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import EmptyInputError, LengthMismatchError

DECISION_THRESHOLD = 0.5


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_scores(cls, scores, labels, threshold: float = DECISION_THRESHOLD) -> "ConfusionMatrix":
        scores = np.asarray(scores, dtype=np.float64).ravel()
        labels = np.asarray(labels).ravel().astype(int)
        pred = scores >= threshold
        pos = labels == 1
        return cls(
            tp=int(np.sum(pred & pos)),
            fp=int(np.sum(pred & ~pos)),
            tn=int(np.sum(~pred & ~pos)),
            fn=int(np.sum(~pred & pos)),
        )


@dataclass(frozen=True)
class MetricsRecord:
    auc: float | None
    accuracy: float
    balanced_accuracy: float
    sensitivity: float | None
    specificity: float | None
    f1: float
    precision: float
    single_class: bool = False

    def to_dict(self) -> dict:
        return {
            "auc": self.auc,
            "accuracy": self.accuracy,
            "balanced_accuracy": self.balanced_accuracy,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "f1": self.f1,
            "precision": self.precision,
            "single_class": self.single_class,
        }


def auc_score(scores, labels) -> float | None:
    """AUC via the Mann-Whitney rank statistic with midrank ties.

    Returns None when only one class is present.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel().astype(int)
    n_pos = int(np.sum(labels == 1))
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores, method="average")
    r_pos = float(np.sum(ranks[labels == 1]))
    return (r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def compute_metrics(scores, labels, threshold: float = DECISION_THRESHOLD) -> MetricsRecord:
    """Full metric panel for probability scores against binary labels."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.size != labels.size:
        raise LengthMismatchError(f"{scores.size} scores vs {labels.size} labels")
    if scores.size == 0:
        raise EmptyInputError("no scores to evaluate")
    labels = labels.astype(int)

    cm = ConfusionMatrix.from_scores(scores, labels, threshold)
    sens = cm.tp / (cm.tp + cm.fn) if (cm.tp + cm.fn) > 0 else None
    spec = cm.tn / (cm.tn + cm.fp) if (cm.tn + cm.fp) > 0 else None
    single = sens is None or spec is None
    if single:
        ba = sens if sens is not None else spec
    else:
        ba = (sens + spec) / 2.0
    prec = cm.tp / (cm.tp + cm.fp) if (cm.tp + cm.fp) > 0 else 0.0
    rec = sens if sens is not None else 0.0
    f1 = 2.0 * prec * rec / (prec + rec) if (prec + rec) > 0 else 0.0
    return MetricsRecord(
        auc=auc_score(scores, labels),
        accuracy=(cm.tp + cm.tn) / cm.total,
        balanced_accuracy=float(ba),
        sensitivity=sens,
        specificity=spec,
        f1=f1,
        precision=prec,
        single_class=single,
    )


def label_drift_batches(benchmark: float, per_batch: list[MetricsRecord]) -> list[bool]:
    """Flag batches whose balanced accuracy fell strictly below the benchmark."""
    if not (0.0 <= benchmark <= 1.0):
        raise ValueError("benchmark must lie in [0, 1]")
    return [rec.balanced_accuracy < benchmark for rec in per_batch]
