"""Inflation of 2-D convolution kernels into 3-D kernels.

Two modes: CenterPlane places the 2-D kernel on the middle depth plane and
zeros the rest, so a 3-D convolution over depth-constant input reproduces
the 2-D output exactly; Averaged spreads the kernel as k2/kd over every
plane, conserving total weight mass while mixing neighboring frames.

Kernel containers use one canonical axis order, (kd, kh, kw, c_in, c_out);
importers from other layouts must permute before constructing a kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fnmatch import fnmatchcase

import numpy as np

from .errors import EvenDepthCenter, KernelLargerThanInput, ShapeMismatch


class InflationMode(Enum):
    CENTER_PLANE = "center_plane"
    AVERAGED = "averaged"


def _check_weights(w: np.ndarray, ndim: int, what: str) -> np.ndarray:
    if w.ndim != ndim:
        raise ShapeMismatch(f"{what} weights must be {ndim}-D, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError(f"{what} weights must be finite")
    return np.ascontiguousarray(w, dtype=np.float32)


@dataclass(frozen=True)
class Kernel2D:
    """A (kh, kw, c_in, c_out) convolution kernel with optional bias."""

    weights: np.ndarray
    bias: np.ndarray | None = None

    def __post_init__(self):
        w = _check_weights(self.weights, 4, "Kernel2D")
        object.__setattr__(self, "weights", w)
        if self.bias is not None:
            b = np.asarray(self.bias, dtype=np.float32)
            if b.shape != (w.shape[3],):
                raise ShapeMismatch(f"bias shape {b.shape} != (c_out,) = ({w.shape[3]},)")
            object.__setattr__(self, "bias", b)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.weights.shape


@dataclass(frozen=True)
class Kernel3D:
    """A (kd, kh, kw, c_in, c_out) convolution kernel with optional bias."""

    weights: np.ndarray
    bias: np.ndarray | None = None

    def __post_init__(self):
        w = _check_weights(self.weights, 5, "Kernel3D")
        object.__setattr__(self, "weights", w)
        if self.bias is not None:
            b = np.asarray(self.bias, dtype=np.float32)
            if b.shape != (w.shape[4],):
                raise ShapeMismatch(f"bias shape {b.shape} != (c_out,) = ({w.shape[4]},)")
            object.__setattr__(self, "bias", b)

    @property
    def shape(self) -> tuple[int, int, int, int, int]:
        return self.weights.shape


def inflate(k2: Kernel2D, kd: int, mode: InflationMode) -> Kernel3D:
    """Extend a 2-D kernel to depth kd.

    Parameters
    ----------
    k2 : Kernel2D
    kd : int
        Target depth, >= 1. Must be odd for CenterPlane so a middle
        plane exists.
    mode : InflationMode
        CENTER_PLANE puts k2 on plane (kd-1)//2 with zeros elsewhere;
        AVERAGED sets every plane to k2/kd.

    Returns
    -------
    Kernel3D
        Bias, when present, is copied unchanged.
    """
    if kd < 1:
        raise ValueError(f"kd must be >= 1, got {kd}")
    kh, kw, ci, co = k2.shape
    if mode is InflationMode.CENTER_PLANE:
        if kd % 2 == 0:
            raise EvenDepthCenter(f"center-plane inflation needs odd depth, got kd={kd}")
        w3 = np.zeros((kd, kh, kw, ci, co), dtype=np.float32)
        w3[(kd - 1) // 2] = k2.weights
    elif mode is InflationMode.AVERAGED:
        plane = (k2.weights.astype(np.float64) / kd).astype(np.float32)
        w3 = np.broadcast_to(plane, (kd, kh, kw, ci, co)).copy()
    else:
        raise ValueError(f"unknown inflation mode {mode!r}")
    bias = None if k2.bias is None else k2.bias.copy()
    return Kernel3D(w3, bias)


def inflate_map(tensors: dict[str, np.ndarray],
                rules: list[tuple[str, int, InflationMode]]) -> dict[str, np.ndarray]:
    """Inflate every 4-D tensor whose name matches a rule pattern.

    Rules are (fnmatch pattern, kd, mode), first match wins. Unmatched
    tensors are passed through byte-identical; a matched tensor that is
    not a 4-D kernel raises ShapeMismatch naming it.
    """
    out: dict[str, np.ndarray] = {}
    for name, arr in tensors.items():
        rule = next(((kd, mode) for pat, kd, mode in rules if fnmatchcase(name, pat)), None)
        if rule is None:
            out[name] = arr
            continue
        kd, mode = rule
        if arr.ndim != 4:
            raise ShapeMismatch(
                f"tensor {name!r} matched an inflation rule but has shape "
                f"{arr.shape}, expected a 4-D (kh, kw, c_in, c_out) kernel")
        out[name] = inflate(Kernel2D(arr), kd, mode).weights
    return out


def conv2d_ref(image: np.ndarray, k: Kernel2D) -> np.ndarray:
    """Direct-summation 2-D convolution, valid padding, stride 1.

    image is (H, W) or (H, W, c_in); accumulation is float64 and the
    (H-kh+1, W-kw+1, c_out) result is cast to float32 at the end.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3:
        raise ShapeMismatch(f"image must be 2-D or 3-D, got shape {image.shape}")
    kh, kw, ci, co = k.shape
    h, w, c = img.shape
    if c != ci:
        raise ShapeMismatch(f"image has {c} channels, kernel expects {ci}")
    if kh > h or kw > w:
        raise KernelLargerThanInput(f"kernel {(kh, kw)} exceeds image {(h, w)}")
    weights = k.weights.astype(np.float64)
    out = np.zeros((h - kh + 1, w - kw + 1, co), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            patch = img[i:i + out.shape[0], j:j + out.shape[1], :]
            out += patch @ weights[i, j]
    if k.bias is not None:
        out += k.bias.astype(np.float64)
    return out.astype(np.float32)


def conv3d_ref(vol: np.ndarray, k: Kernel3D) -> np.ndarray:
    """Direct-summation 3-D convolution, valid padding, stride 1.

    vol is (F, H, W) or (F, H, W, c_in); returns float32 of shape
    (F-kd+1, H-kh+1, W-kw+1, c_out).
    """
    v = np.asarray(vol, dtype=np.float64)
    if v.ndim == 3:
        v = v[:, :, :, None]
    if v.ndim != 4:
        raise ShapeMismatch(f"volume must be 3-D or 4-D, got shape {vol.shape}")
    kd, kh, kw, ci, co = k.shape
    f, h, w, c = v.shape
    if c != ci:
        raise ShapeMismatch(f"volume has {c} channels, kernel expects {ci}")
    if kd > f or kh > h or kw > w:
        raise KernelLargerThanInput(f"kernel {(kd, kh, kw)} exceeds volume {(f, h, w)}")
    weights = k.weights.astype(np.float64)
    shape = (f - kd + 1, h - kh + 1, w - kw + 1)
    out = np.zeros(shape + (co,), dtype=np.float64)
    for d in range(kd):
        for i in range(kh):
            for j in range(kw):
                patch = v[d:d + shape[0], i:i + shape[1], j:j + shape[2], :]
                out += patch @ weights[d, i, j]
    if k.bias is not None:
        out += k.bias.astype(np.float64)
    return out.astype(np.float32)
