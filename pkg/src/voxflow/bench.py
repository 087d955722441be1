"""Wall-clock benchmark harness for pipeline application."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import pipeline as pl
from .rng import RandomStream
from .volume import Volume


@dataclass(frozen=True)
class BenchResult:
    runs_ms: tuple[float, ...]

    @property
    def mean_ms(self) -> float:
        return float(np.mean(self.runs_ms))

    @property
    def median_ms(self) -> float:
        return float(np.median(self.runs_ms))

    @property
    def min_ms(self) -> float:
        return float(np.min(self.runs_ms))

    @property
    def max_ms(self) -> float:
        return float(np.max(self.runs_ms))

    def to_dict(self) -> dict:
        return {"runs_ms": [round(t, 3) for t in self.runs_ms],
                "mean_ms": round(self.mean_ms, 3),
                "median_ms": round(self.median_ms, 3),
                "min_ms": round(self.min_ms, 3),
                "max_ms": round(self.max_ms, 3)}


def random_volume(shape: tuple[int, int, int, int], dtype, seed: int = 0) -> Volume:
    """A reproducible random volume for benchmarking and fixtures."""
    rng = RandomStream(seed)
    if np.dtype(dtype) == np.uint8:
        data = rng.integers(0, 256, size=shape).astype(np.uint8)
    else:
        data = rng.uniform(0.0, 1.0, size=shape).astype(np.float32)
    return Volume(data)


def bench_pipeline(pipe: pl.Pipeline, v: Volume, n_runs: int = 10,
                   warmup: int = 2) -> BenchResult:
    """Time pipeline application over consecutive sample indices.

    Warmup runs prime caches and allocator pools and are discarded;
    each timed run uses a distinct sample index so the stochastic gates
    exercise the full step mix.
    """
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    for i in range(warmup):
        pl.apply(pipe, v, i)
    runs = []
    for i in range(n_runs):
        t0 = time.perf_counter()
        pl.apply(pipe, v, warmup + i)
        runs.append((time.perf_counter() - t0) * 1e3)
    return BenchResult(tuple(runs))
