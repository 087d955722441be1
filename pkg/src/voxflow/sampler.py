"""Class-balanced batch index generation for imbalanced training data.

Every batch holds a fixed count of positives and negatives. The scarce
positives are redrawn each batch (without replacement inside a batch,
with replacement across batches); the plentiful negatives cycle through
shuffled epochs so each negative appears exactly once per epoch. All
draws come from a single seeded stream, so a config determines the full
index sequence.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleBatch
from .rng import RandomStream


@dataclass(frozen=True)
class SamplerConfig:
    """Batch geometry plus the label vector the indices point into."""

    batch_size: int
    pos_fraction: float
    labels: np.ndarray
    seed: int = 0

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if self.batch_size < 2:
            raise ValueError(f"batch_size must be >= 2, got {self.batch_size}")
        if not 0.0 < self.pos_fraction < 1.0:
            raise ValueError(f"pos_fraction must be in (0, 1), got {self.pos_fraction}")
        if labels.ndim != 1 or not np.all((labels == 0) | (labels == 1)):
            raise ValueError("labels must be a 1-D binary vector")
        if labels.min() == labels.max():
            raise ValueError("labels must contain both classes")
        object.__setattr__(self, "labels", labels)
        self.labels.setflags(write=False)

    @property
    def n_pos_per_batch(self) -> int:
        # round half up: floor(x + 0.5)
        return int(math.floor(self.pos_fraction * self.batch_size + 0.5))


def batches(cfg: SamplerConfig, n_batches: int) -> list[list[int]]:
    """Generate n_batches index lists with exact per-batch class counts.

    Each batch lists its positives first, then its negatives. Raises
    InfeasibleBatch when either class pool is smaller than its per-batch
    quota, since within-batch uniqueness could not hold.
    """
    if n_batches < 1:
        raise ValueError(f"n_batches must be >= 1, got {n_batches}")
    n_pos = cfg.n_pos_per_batch
    n_neg = cfg.batch_size - n_pos
    pos_pool = np.flatnonzero(cfg.labels == 1)
    neg_pool = np.flatnonzero(cfg.labels == 0)
    if n_pos < 1 or n_neg < 1:
        raise InfeasibleBatch(
            f"batch split {n_pos}/{n_neg} leaves one class empty")
    if len(pos_pool) < n_pos:
        raise InfeasibleBatch(
            f"need {n_pos} distinct positives per batch, pool has {len(pos_pool)}")
    if len(neg_pool) < n_neg:
        raise InfeasibleBatch(
            f"need {n_neg} distinct negatives per batch, pool has {len(neg_pool)}")

    rng = RandomStream(cfg.seed)
    queue: deque[int] = deque(int(i) for i in neg_pool[rng.permutation(len(neg_pool))])
    out: list[list[int]] = []
    for _ in range(n_batches):
        pos = [int(i) for i in rng.sample_without_replacement(pos_pool, n_pos)]
        neg: list[int] = []
        while len(neg) < n_neg:
            if not queue:
                # New epoch mid-batch: indices this batch already holds are
                # deferred, staying queued so they still occur once in the
                # new epoch.
                fresh = (int(i) for i in neg_pool[rng.permutation(len(neg_pool))])
                taken = set(neg)
                keep: deque[int] = deque()
                for i in fresh:
                    if len(neg) < n_neg and i not in taken:
                        neg.append(i)
                    else:
                        keep.append(i)
                queue = keep
                break
            neg.append(queue.popleft())
        out.append(pos + neg)
    return out
