"""Binary-classification metrics for capillary stall scoring.

Scores are probabilities of the positive (stalled) class; a sample is
predicted positive when its score is greater than or equal to the
threshold. Degenerate denominators yield 0 rather than raising: MCC is 0
when any confusion factor is 0, and TPR/FPR are 0 when their class is
empty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySet, IdMismatch, OneClassOnly


@dataclass(frozen=True)
class Prediction:
    """One scored sample."""

    sample_id: str
    score: float
    label: int
    fold: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass(frozen=True)
class PredictionSet:
    """An ordered collection of scored samples with unique ids per fold."""

    records: tuple[Prediction, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen: set[tuple[int | None, str]] = set()
        for r in self.records:
            key = (r.fold, r.sample_id)
            if key in seen:
                raise ValueError(f"duplicate sample id {r.sample_id!r} in fold {r.fold}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def scores(self) -> np.ndarray:
        return np.array([r.score for r in self.records], dtype=np.float64)

    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.records], dtype=np.int64)


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(self.tp + other.tp, self.fp + other.fp,
                         self.tn + other.tn, self.fn + other.fn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(p: PredictionSet, threshold: float) -> Confusion:
    """Tally the confusion matrix at one threshold (positive iff score >= t)."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    if len(p) == 0:
        raise EmptySet("cannot tally an empty prediction set")
    tp = fp = tn = fn = 0
    for r in p:
        predicted = r.score >= threshold
        if predicted and r.label == 1:
            tp += 1
        elif predicted and r.label == 0:
            fp += 1
        elif not predicted and r.label == 0:
            tn += 1
        else:
            fn += 1
    return Confusion(tp, fp, tn, fn)


def mcc(c: Confusion) -> float:
    """Matthews correlation coefficient; 0 when any factor of the
    denominator is 0."""
    denom = ((c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn))
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def tpr(c: Confusion) -> float:
    """True-positive rate TP/(TP+FN); 0 when there are no positives."""
    denom = c.tp + c.fn
    return c.tp / denom if denom else 0.0


def fpr(c: Confusion) -> float:
    """False-positive rate FP/(FP+TN); 0 when there are no negatives."""
    denom = c.fp + c.tn
    return c.fp / denom if denom else 0.0


def roc_auc(p: PredictionSet) -> float:
    """Area under the ROC curve by the Mann-Whitney statistic.

    Equals P(score+ > score-) + 0.5 P(score+ = score-), computed from
    tie-averaged ranks in O(n log n).
    """
    scores = p.scores()
    labels = p.labels()
    return _auc_arrays(scores, labels)


def _auc_arrays(scores: np.ndarray, labels: np.ndarray) -> float:
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise OneClassOnly(f"need both classes, got {n_pos} positive / {n_neg} negative")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum_pos = float(ranks[labels == 1].sum())
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def pooled_cv(folds: list[PredictionSet], threshold: float) -> tuple[Confusion, float, float]:
    """Score a cross-validation as one pool.

    Confusion counts are summed across folds before MCC; AUC is computed
    on the concatenated records so the result matches metrics over the
    full dataset.
    """
    if not folds:
        raise EmptySet("need at least one fold")
    total = Confusion(0, 0, 0, 0)
    for f in folds:
        total = total + confusion(f, threshold)
    scores = np.concatenate([f.scores() for f in folds])
    labels = np.concatenate([f.labels() for f in folds])
    return total, mcc(total), _auc_arrays(scores, labels)


def fold_mean(predictions_per_model: list[PredictionSet]) -> PredictionSet:
    """Average each sample's score across models (label carried through).

    Every set must cover exactly the same sample ids; output record order
    follows the first set.
    """
    if not predictions_per_model:
        raise EmptySet("need at least one prediction set")
    first = predictions_per_model[0]
    base_ids = [r.sample_id for r in first]
    base_set = set(base_ids)
    sums = {r.sample_id: 0.0 for r in first}
    labels = {r.sample_id: r.label for r in first}
    for k, pset in enumerate(predictions_per_model):
        ids = {r.sample_id for r in pset}
        if ids != base_set:
            missing = sorted(base_set - ids)
            extra = sorted(ids - base_set)
            raise IdMismatch(f"set {k}: missing ids {missing[:5]}, unexpected ids {extra[:5]}")
        for r in pset:
            if labels[r.sample_id] != r.label:
                raise IdMismatch(f"set {k}: label of {r.sample_id!r} disagrees")
            sums[r.sample_id] += r.score
    n = len(predictions_per_model)
    return PredictionSet(tuple(
        Prediction(sid, sums[sid] / n, labels[sid]) for sid in base_ids))
