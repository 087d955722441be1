"""Core value types: volumes, axes, cuboid regions, and dtype casting.

A :class:`Volume` is a dense 4-D array in (frames, height, width, channels)
row-major order, restricted to uint8 or float32 with 1 or 3 channels. It is
immutable after construction and therefore safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import RegionOutOfBounds

SUPPORTED_DTYPES = (np.uint8, np.float32)


class Axis(IntEnum):
    """Spatial axes of a volume; the channel axis is never addressed."""

    FRAMES = 0
    HEIGHT = 1
    WIDTH = 2


@dataclass(frozen=True)
class Cuboid:
    """Axis-aligned 3-D region with half-open [a0, a1) extents per axis."""

    f0: int
    f1: int
    r0: int
    r1: int
    c0: int
    c1: int

    def __post_init__(self):
        for lo, hi, name in ((self.f0, self.f1, "frame"),
                             (self.r0, self.r1, "row"),
                             (self.c0, self.c1, "column")):
            if lo < 0 or lo >= hi:
                raise ValueError(f"invalid {name} interval [{lo}, {hi})")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.f1 - self.f0, self.r1 - self.r0, self.c1 - self.c0)

    @property
    def n_voxels(self) -> int:
        f, r, c = self.shape
        return f * r * c

    def contains(self, other: "Cuboid") -> bool:
        return (self.f0 <= other.f0 and other.f1 <= self.f1
                and self.r0 <= other.r0 and other.r1 <= self.r1
                and self.c0 <= other.c0 and other.c1 <= self.c1)

    def to_dict(self) -> dict:
        return {"f0": self.f0, "f1": self.f1, "r0": self.r0,
                "r1": self.r1, "c0": self.c0, "c1": self.c1}

    @classmethod
    def from_dict(cls, d: dict) -> "Cuboid":
        return cls(int(d["f0"]), int(d["f1"]), int(d["r0"]),
                   int(d["r1"]), int(d["c0"]), int(d["c1"]))


class Volume:
    """Immutable (F, H, W, C) voxel array, C-contiguous, uint8 or float32."""

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray):
        arr = np.asarray(data)
        if arr.ndim != 4:
            raise ValueError(f"volume must be 4-D (F,H,W,C), got shape {arr.shape}")
        if arr.dtype not in (np.dtype(np.uint8), np.dtype(np.float32)):
            raise ValueError(f"unsupported dtype {arr.dtype}; use uint8 or float32")
        f, h, w, c = arr.shape
        if min(f, h, w) < 1:
            raise ValueError(f"extents must be >= 1, got {arr.shape}")
        if c not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {c}")
        if arr.dtype == np.float32 and not np.isfinite(arr).all():
            raise ValueError("float32 volume contains non-finite values")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Volume is immutable")

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def channels(self) -> int:
        return self.data.shape[3]

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.data.shape

    @property
    def spatial_shape(self) -> tuple[int, int, int]:
        return self.data.shape[:3]

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def extent(self, axis: Axis) -> int:
        return self.data.shape[int(axis)]

    def full_region(self) -> Cuboid:
        return Cuboid(0, self.frames, 0, self.height, 0, self.width)

    def equals(self, other: "Volume") -> bool:
        return (self.dtype == other.dtype and self.shape == other.shape
                and np.array_equal(self.data, other.data))

    def __repr__(self):
        return f"Volume(shape={self.shape}, dtype={self.dtype})"


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round to nearest integer with halves away from zero (not banker's)."""
    return np.where(x >= 0, np.floor(x + 0.5), np.ceil(x - 0.5))


def quantize_to(values: np.ndarray, dtype) -> np.ndarray:
    """Map float results back to a volume dtype.

    uint8 rounds half away from zero and clamps to [0, 255]; float32 casts.
    """
    dtype = np.dtype(dtype)
    if dtype == np.uint8:
        return np.clip(round_half_away(values), 0, 255).astype(np.uint8)
    if dtype == np.float32:
        return np.asarray(values, dtype=np.float32)
    raise ValueError(f"unsupported dtype {dtype}")


def crop(v: Volume, region: Cuboid) -> Volume:
    """Copy the voxels of ``region`` bit-exactly into a new volume."""
    if (region.f1 > v.frames or region.r1 > v.height or region.c1 > v.width):
        raise RegionOutOfBounds(
            f"region {region.to_dict()} exceeds volume extents {v.spatial_shape}")
    return Volume(v.data[region.f0:region.f1,
                         region.r0:region.r1,
                         region.c0:region.c1])


def cast(v: Volume, target_dtype) -> Volume:
    """Convert between uint8 and float32.

    uint8 -> float32 is exact; float32 -> uint8 rounds half away from zero
    and clamps to [0, 255].
    """
    target = np.dtype(target_dtype)
    if target == v.dtype:
        return v
    if target == np.float32:
        return Volume(v.data.astype(np.float32))
    if target == np.uint8:
        return Volume(quantize_to(v.data, np.uint8))
    raise ValueError(f"unsupported target dtype {target}")
