"""Attention heatmaps from a final convolutional feature volume.

The channel axis is reduced to three per-voxel statistics (std, max,
mean), each min-max normalized to 0..255 and stacked as the R, G, B
channels of a low-resolution heatmap volume. Overlaying upscales by the
network's total stride with nearest-neighbor so the coarse cells stay
visible, crops to the input extents, and alpha-blends.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ShapeIncompatible, ShapeMismatch
from .volume import Volume, round_half_away


def reduce_channels(fv: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-voxel std, max, and mean over the channel axis.

    fv is a (f, h, w, c) float array; std is the population standard
    deviation, 0 when c = 1. Returns three (f, h, w) float32 maps.
    """
    fv = np.asarray(fv)
    if fv.ndim != 4:
        raise ShapeMismatch(f"feature volume must be 4-D, got shape {fv.shape}")
    if not np.all(np.isfinite(fv)):
        raise ValueError("feature volume must be finite")
    data = fv.astype(np.float64)
    std = data.std(axis=-1).astype(np.float32)
    mx = data.max(axis=-1).astype(np.float32)
    mean = data.mean(axis=-1).astype(np.float32)
    return std, mx, mean


def _normalize_255(m: np.ndarray) -> np.ndarray:
    lo = float(m.min())
    hi = float(m.max())
    if hi == lo:
        return np.zeros(m.shape, dtype=np.uint8)
    scaled = (m.astype(np.float64) - lo) * (255.0 / (hi - lo))
    return round_half_away(scaled).astype(np.uint8)


def to_rgb(std_map: np.ndarray, max_map: np.ndarray, mean_map: np.ndarray) -> Volume:
    """Stack normalized (std, max, mean) maps as an RGB uint8 volume.

    Each map is min-max normalized to [0, 255] independently; a constant
    map normalizes to all zeros.
    """
    if not (std_map.shape == max_map.shape == mean_map.shape):
        raise ShapeMismatch(
            f"maps must share shape, got {std_map.shape}, {max_map.shape}, "
            f"{mean_map.shape}")
    channels = [_normalize_255(m) for m in (std_map, max_map, mean_map)]
    return Volume(np.stack(channels, axis=-1))


def heatmap_from_features(fv: np.ndarray) -> Volume:
    """Full reduction chain: feature volume to RGB heatmap."""
    return to_rgb(*reduce_channels(fv))


def upscale_overlay(hm: Volume, input_v: Volume, factor: int = 32,
                    alpha: float = 0.5) -> Volume:
    """Blend an upscaled heatmap onto the input volume.

    The heatmap extents must equal ceil(input extent / factor) per spatial
    axis. Nearest-neighbor upscaling by `factor` is cropped to the input
    extents and blended as alpha*heatmap + (1-alpha)*input, rounded to
    uint8. A grayscale input is replicated to three channels.
    """
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if hm.channels != 3 or hm.dtype != np.uint8:
        raise ShapeIncompatible(f"heatmap must be uint8 RGB, got "
                                f"{hm.channels} channels, dtype {hm.dtype}")
    for axis in range(3):
        want = math.ceil(input_v.shape[axis] / factor)
        if hm.shape[axis] != want:
            raise ShapeIncompatible(
                f"axis {axis}: heatmap extent {hm.shape[axis]} != "
                f"ceil({input_v.shape[axis]}/{factor}) = {want}")
    # blend one frame at a time so full-resolution volumes never force a
    # whole-volume float temporary
    out = np.empty((input_v.frames, input_v.height, input_v.width, 3),
                   dtype=np.uint8)
    for f in range(input_v.frames):
        plane = hm.data[f // factor]
        plane = np.repeat(np.repeat(plane, factor, axis=0), factor, axis=1)
        plane = plane[:input_v.height, :input_v.width, :]
        base = input_v.data[f].astype(np.float64)
        if input_v.channels == 1:
            base = np.repeat(base, 3, axis=-1)
        blended = alpha * plane.astype(np.float64) + (1.0 - alpha) * base
        out[f] = np.clip(round_half_away(blended), 0, 255).astype(np.uint8)
    return Volume(out)
