"""Probability calibration and uncertainty aggregation.

Isotonic regression fits the least-squares non-decreasing step function
from score to label frequency (pool-adjacent-violators); evaluation is
piecewise constant and left-continuous, clamped to the first/last fitted
value outside the breakpoint range. Uncertainty statistics reduce a matrix
of repeated stochastic predictions to per-sample spreads and per-class
spread aggregates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OneClassOnly, SplitInfeasible
from .metrics import Prediction, PredictionSet
from .rng import RandomStream


@dataclass(frozen=True)
class IsotonicModel:
    """Non-decreasing step function from score to calibrated probability.

    breakpoints are the distinct training scores in increasing order;
    values are the fitted probabilities. A score maps to the value of the
    first breakpoint >= it, clamping to the last value beyond the range.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=np.float64)
        vals = np.asarray(self.values, dtype=np.float64)
        if bp.ndim != 1 or bp.shape != vals.shape or bp.size == 0:
            raise ValueError("breakpoints and values must be equal-length 1-D arrays")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(np.diff(vals) < 0):
            raise ValueError("values must be non-decreasing")
        if vals.min() < 0 or vals.max() > 1:
            raise ValueError("values must lie in [0, 1]")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        self.breakpoints.setflags(write=False)
        self.values.setflags(write=False)


def _pav(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted least-squares non-decreasing fit (pool adjacent violators)."""
    means: list[float] = []
    weights: list[float] = []
    counts: list[int] = []
    for yi, wi in zip(y, w):
        means.append(float(yi))
        weights.append(float(wi))
        counts.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, c2 = means.pop(), weights.pop(), counts.pop()
            m1, w1, c1 = means.pop(), weights.pop(), counts.pop()
            wt = w1 + w2
            means.append((m1 * w1 + m2 * w2) / wt)
            weights.append(wt)
            counts.append(c1 + c2)
    return np.repeat(means, counts)


def isotonic_fit(p: PredictionSet) -> IsotonicModel:
    """Fit calibration by isotonic regression of labels on scores.

    Samples sharing a score are merged (weighted by multiplicity) before
    pooling, so the breakpoints are the distinct scores.
    """
    scores = p.scores()
    labels = p.labels()
    if scores.size < 2:
        raise ValueError(f"need >= 2 samples, got {scores.size}")
    if labels.min() == labels.max():
        raise OneClassOnly("isotonic fit needs both labels present")
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    y = labels[order].astype(np.float64)
    uniq, start = np.unique(s, return_index=True)
    w = np.diff(np.append(start, s.size)).astype(np.float64)
    y_mean = np.add.reduceat(y, start) / w
    fitted = _pav(y_mean, w)
    return IsotonicModel(uniq, fitted)


def isotonic_apply(m: IsotonicModel, score) -> np.ndarray | float:
    """Evaluate the step function at one score or an array of scores."""
    s = np.asarray(score, dtype=np.float64)
    idx = np.searchsorted(m.breakpoints, s, side="left")
    idx = np.minimum(idx, m.breakpoints.size - 1)
    out = m.values[idx]
    return float(out) if np.isscalar(score) or s.ndim == 0 else out


def calibrate_split(p: PredictionSet, rng: RandomStream,
                    max_retries: int = 100) -> tuple[PredictionSet, IsotonicModel]:
    """Half-split calibration: fit on a random half, calibrate the other.

    The set is randomly permuted and cut in two; the first half trains an
    isotonic model and the second half is re-scored through it. Splits
    leaving either half one-classed are redrawn up to max_retries times
    before SplitInfeasible.
    """
    n = len(p)
    if n < 4:
        raise SplitInfeasible(f"need >= 4 samples to split, got {n}")
    records = p.records
    labels = np.array([r.label for r in records])
    half = n // 2
    for _ in range(max_retries):
        perm = rng.permutation(n)
        a, b = perm[:half], perm[half:]
        if labels[a].min() == labels[a].max() or labels[b].min() == labels[b].max():
            continue
        model = isotonic_fit(PredictionSet(tuple(records[i] for i in a)))
        calibrated = PredictionSet(tuple(
            Prediction(records[i].sample_id,
                       float(isotonic_apply(model, records[i].score)),
                       records[i].label, records[i].fold)
            for i in b))
        return calibrated, model
    raise SplitInfeasible(
        f"no split with both classes per half in {max_retries} tries")


@dataclass(frozen=True)
class ReliabilityBin:
    """One reliability-diagram bin; mean_pred/pos_rate are NaN when empty."""

    lo: float
    hi: float
    mean_pred: float
    pos_rate: float
    count: int


def reliability_bins(p: PredictionSet, n_bins: int = 10) -> list[ReliabilityBin]:
    """Equal-width reliability bins on [0, 1].

    Bins are [lo, hi) except the last, which closes at 1.0 so a score of
    exactly 1 is counted.
    """
    if n_bins < 2:
        raise ValueError(f"n_bins must be >= 2, got {n_bins}")
    scores = p.scores()
    labels = p.labels()
    idx = np.clip(np.floor(scores * n_bins).astype(int), 0, n_bins - 1)
    bins = []
    for b in range(n_bins):
        sel = idx == b
        count = int(sel.sum())
        if count:
            mean_pred = float(scores[sel].mean())
            pos_rate = float(labels[sel].mean())
        else:
            mean_pred = float("nan")
            pos_rate = float("nan")
        bins.append(ReliabilityBin(b / n_bins, (b + 1) / n_bins, mean_pred,
                                   pos_rate, count))
    return bins


def binned_calibration_error(p: PredictionSet, n_bins: int = 10) -> float:
    """Count-weighted mean |mean predicted - empirical positive rate|."""
    bins = reliability_bins(p, n_bins)
    total = sum(b.count for b in bins)
    return sum(b.count * abs(b.mean_pred - b.pos_rate) for b in bins if b.count) / total


@dataclass(frozen=True)
class ProbMatrix:
    """Repeated stochastic predictions: one row per sample, T >= 2 columns."""

    sample_ids: tuple[str, ...]
    labels: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if probs.ndim != 2 or probs.shape[1] < 2:
            raise ValueError(f"probs must be (n, T>=2), got {probs.shape}")
        n = probs.shape[0]
        if labels.shape != (n,) or len(self.sample_ids) != n:
            raise ValueError("sample_ids, labels, and probs rows must align")
        if not np.all(np.isfinite(probs)) or probs.min() < 0 or probs.max() > 1:
            raise ValueError("probs must be finite and in [0, 1]")
        if not np.all((labels == 0) | (labels == 1)):
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)

    @property
    def n_samples(self) -> int:
        return self.probs.shape[0]

    @property
    def n_draws(self) -> int:
        return self.probs.shape[1]


@dataclass(frozen=True)
class UncertaintyStats:
    """Per-sample reductions of a ProbMatrix and per-class spread aggregates."""

    sample_ids: tuple[str, ...]
    labels: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    spread: np.ndarray
    class_spread_mean: dict[int, float] = field(default_factory=dict)
    class_spread_std: dict[int, float] = field(default_factory=dict)


def mc_dropout_stats(m: ProbMatrix, spread: str = "std") -> UncertaintyStats:
    """Reduce repeated predictions to per-sample spread and class aggregates.

    spread selects the per-sample dispersion measure: "std" (population
    standard deviation across the T draws) or "range" (max - min). Class
    aggregates are the mean and population std of the per-sample spreads,
    separately for label 0 and label 1 (NaN for an absent class).
    """
    if spread not in ("std", "range"):
        raise ValueError(f"spread must be 'std' or 'range', got {spread!r}")
    mean = m.probs.mean(axis=1)
    std = m.probs.std(axis=1)
    disp = std if spread == "std" else m.probs.max(axis=1) - m.probs.min(axis=1)
    cls_mean: dict[int, float] = {}
    cls_std: dict[int, float] = {}
    for label in (0, 1):
        sel = m.labels == label
        if sel.any():
            cls_mean[label] = float(disp[sel].mean())
            cls_std[label] = float(disp[sel].std())
        else:
            cls_mean[label] = float("nan")
            cls_std[label] = float("nan")
    return UncertaintyStats(m.sample_ids, m.labels, mean, std, disp,
                            cls_mean, cls_std)
