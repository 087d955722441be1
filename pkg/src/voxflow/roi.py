"""Detection of the orange annotation contour and ROI cropping.

Frames carry a hand-drawn orange outline around the vessel segment of
interest. Masking is a pure per-pixel HSV rule; the ROI cuboid is the
padded bounding box of every orange pixel across all frames, with the
frame axis kept at full range (the annotation marks a spatial region,
not a temporal one).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoContourFound, NotRGB
from .volume import Cuboid, Volume


@dataclass(frozen=True)
class ColorRule:
    """HSV window: hue in degrees, saturation/value minima in [0, 1].

    A hue window with hue_lo > hue_hi wraps around 0 (e.g. reds).
    """

    hue_lo: float = 10.0
    hue_hi: float = 45.0
    s_min: float = 0.45
    v_min: float = 0.30

    def __post_init__(self):
        for name in ("hue_lo", "hue_hi"):
            h = getattr(self, name)
            if not 0.0 <= h < 360.0:
                raise ValueError(f"{name} must be in [0, 360), got {h}")
        for name in ("s_min", "v_min"):
            t = getattr(self, name)
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {t}")


def _rgb_to_hsv(frame: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hue (degrees), saturation, value for an 8-bit RGB frame."""
    rgb = frame.astype(np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    delta = v - rgb.min(axis=-1)
    s = np.where(v > 0, delta / np.maximum(v, 1e-300), 0.0)
    hue = np.zeros_like(v)
    nz = delta > 0
    rmax = nz & (v == r)
    gmax = nz & ~rmax & (v == g)
    bmax = nz & ~rmax & ~gmax
    hue[rmax] = ((g - b)[rmax] / delta[rmax]) % 6.0
    hue[gmax] = (b - r)[gmax] / delta[gmax] + 2.0
    hue[bmax] = (r - g)[bmax] / delta[bmax] + 4.0
    return hue * 60.0, s, v


def orange_mask(frame: np.ndarray, rule: ColorRule = ColorRule()) -> np.ndarray:
    """Boolean mask of pixels inside the rule's HSV window."""
    frame = np.asarray(frame)
    if frame.ndim != 3 or frame.shape[2] != 3 or frame.dtype != np.uint8:
        raise NotRGB(f"expected (H, W, 3) uint8 frame, got shape "
                     f"{frame.shape} dtype {frame.dtype}")
    hue, s, v = _rgb_to_hsv(frame)
    if rule.hue_lo <= rule.hue_hi:
        in_hue = (hue >= rule.hue_lo) & (hue <= rule.hue_hi)
    else:
        in_hue = (hue >= rule.hue_lo) | (hue <= rule.hue_hi)
    return in_hue & (s >= rule.s_min) & (v >= rule.v_min)


def roi_cuboid(frames, rule: ColorRule = ColorRule(), pad: int = 8) -> Cuboid:
    """Bounding cuboid of the annotation contour across a frame stack.

    frames is a Volume (C=3 uint8) or an iterable of RGB frames. Row and
    column bounds are the union bounding box of all per-frame masks,
    expanded by pad voxels and clamped to the frame; the frame range is
    always [0, F).
    """
    if pad < 0:
        raise ValueError(f"pad must be >= 0, got {pad}")
    if isinstance(frames, Volume):
        frames = list(frames.data)
    else:
        frames = [np.asarray(f) for f in frames]
    if not frames:
        raise NoContourFound("no frames supplied")
    r0 = c0 = None
    r1 = c1 = None
    for frame in frames:
        mask = orange_mask(frame, rule)
        rows = np.flatnonzero(mask.any(axis=1))
        if rows.size == 0:
            continue
        cols = np.flatnonzero(mask.any(axis=0))
        r0 = int(rows[0]) if r0 is None else min(r0, int(rows[0]))
        r1 = int(rows[-1]) + 1 if r1 is None else max(r1, int(rows[-1]) + 1)
        c0 = int(cols[0]) if c0 is None else min(c0, int(cols[0]))
        c1 = int(cols[-1]) + 1 if c1 is None else max(c1, int(cols[-1]) + 1)
    if r0 is None:
        raise NoContourFound("no pixel matched the color rule in any frame")
    nh, nw = frames[0].shape[:2]
    return Cuboid(f0=0, f1=len(frames),
                  r0=max(0, r0 - pad), r1=min(nh, r1 + pad),
                  c0=max(0, c0 - pad), c1=min(nw, c1 + pad))


@dataclass(frozen=True)
class AxisStats:
    """Size distribution of cuboids along one axis."""

    sizes: np.ndarray
    mean: float
    percentiles: dict[int, float]
    hist_counts: np.ndarray
    hist_edges: np.ndarray


_PERCENTILES = (5, 25, 50, 75, 95)


def roi_stats(cuboids: list[Cuboid], bin_width: int = 8) -> dict[str, AxisStats]:
    """Per-axis ROI size summaries (mean, percentiles, histogram)."""
    if not cuboids:
        raise ValueError("need at least one cuboid")
    if bin_width < 1:
        raise ValueError(f"bin_width must be >= 1, got {bin_width}")
    out: dict[str, AxisStats] = {}
    for name, axis in (("frames", 0), ("rows", 1), ("cols", 2)):
        sizes = np.array([c.shape[axis] for c in cuboids], dtype=np.int64)
        top = int(np.ceil((sizes.max() + 1) / bin_width)) * bin_width
        edges = np.arange(0, top + 1, bin_width)
        counts, _ = np.histogram(sizes, bins=edges)
        pct = {q: float(np.percentile(sizes, q)) for q in _PERCENTILES}
        out[name] = AxisStats(sizes, float(sizes.mean()), pct, counts, edges)
    return out
