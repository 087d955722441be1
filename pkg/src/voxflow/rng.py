"""Deterministic random streams.

A :class:`RandomStream` wraps a single fixed PRNG algorithm (PCG64) so that
identical seeds produce identical draw sequences on every platform.  Child
streams are derived from the parent *seed* (never from generator state) by a
fixed 64-bit hash, so ``child(parent, i)`` is independent of how many draws
the parent has made and of the order in which children are created.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(seed: int, index: int) -> int:
    """Derive a child seed from ``(seed, index)`` via the splitmix64 finalizer.

    The mixing function is fixed forever; changing it would silently change
    every seeded result in the library.
    """
    z = (seed + _GOLDEN * (index + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


class RandomStream:
    """Single-owner deterministic random stream.

    Parallel work must use :meth:`child` streams; a stream instance itself is
    stateful and must not be shared across threads.
    """

    algorithm = "pcg64"

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = seed & _MASK64
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def __repr__(self):
        return f"RandomStream(seed={self.seed})"

    def child(self, index: int) -> "RandomStream":
        if index < 0:
            raise ValueError("child index must be non-negative")
        return RandomStream(mix64(self.seed, index))

    # Draw methods. All draws below consume from the same PCG64 sequence in
    # call order, so callers must keep their draw order fixed.

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self._gen.uniform(low, high, size=size)

    def integers(self, low: int, high: int, size=None):
        """Uniform integers in the half-open interval [low, high)."""
        return self._gen.integers(low, high, size=size)

    def normal(self, size=None, dtype=np.float64):
        return self._gen.standard_normal(size=size, dtype=dtype)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def sample_without_replacement(self, pool: np.ndarray, k: int) -> np.ndarray:
        return self._gen.choice(pool, size=k, replace=False)


def child_stream(parent: RandomStream, index: int) -> RandomStream:
    """Derive the ``index``-th child of ``parent`` (pure in the parent seed)."""
    return parent.child(index)
