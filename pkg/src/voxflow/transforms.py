"""The ten augmentation transforms.

Every transform is a pure function ``(Volume, RandomStream, params) -> Volume``:
the same volume, seed, and parameters always produce a bit-identical result.
Output dtype equals input dtype, and uint8 results stay in [0, 255].

Only ``rotate90``, ``crop_from_borders``, ``drop_plane``, and ``resize`` may
change the shape. Interpolating transforms use edge-clamped sampling except
``rotate_small``, which fills the area swept outside the frame with zeros.

Draw order within each transform is part of its contract and must never be
reordered; changing it would change every seeded output.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import AxisTooShort
from .rng import RandomStream
from .volume import Axis, Volume, quantize_to


# --- shared interpolation helpers -------------------------------------------

def _axis_lerp_indices(in_size: int, out_size: int):
    """Source indices/weights for half-pixel linear resampling along one axis.

    Output coordinate x samples input coordinate (x + 0.5) * in/out - 0.5,
    clamped to the valid range (edge handling).
    """
    src = (np.arange(out_size, dtype=np.float64) + 0.5) * (in_size / out_size) - 0.5
    src = np.clip(src, 0.0, in_size - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, in_size - 1)
    w = (src - i0).astype(np.float32)
    return i0, i1, w


def _axis_nearest_indices(in_size: int, out_size: int) -> np.ndarray:
    src = (np.arange(out_size, dtype=np.float64) + 0.5) * (in_size / out_size) - 0.5
    idx = np.floor(src + 0.5).astype(np.intp)
    return np.clip(idx, 0, in_size - 1)


def _resize_trilinear(data: np.ndarray, target: tuple[int, int, int]) -> np.ndarray:
    """Separable trilinear resampling of (F,H,W,C) data to target spatial shape."""
    out = data.astype(np.float32, copy=False)
    for axis in range(3):
        in_size = out.shape[axis]
        out_size = target[axis]
        if in_size == out_size:
            continue
        i0, i1, w = _axis_lerp_indices(in_size, out_size)
        lo = np.take(out, i0, axis=axis)
        hi = np.take(out, i1, axis=axis)
        wshape = [1, 1, 1, 1]
        wshape[axis] = out_size
        w = w.reshape(wshape)
        out = lo + (hi - lo) * w
    return out


def _trilinear_gather(data: np.ndarray, coords_f, coords_r, coords_c) -> np.ndarray:
    """Sample (F,H,W,C) data at fractional voxel coordinates, edge-clamped.

    The three coordinate arrays share one shape (F,H,W); all channels are
    sampled at the same spatial locations. Returns float32 of shape
    coords.shape + (C,).
    """
    nf, nh, nw, nc = data.shape
    cf = np.clip(coords_f, 0.0, nf - 1)
    cr = np.clip(coords_r, 0.0, nh - 1)
    cc = np.clip(coords_c, 0.0, nw - 1)

    f0 = cf.astype(np.int32)
    r0 = cr.astype(np.int32)
    c0 = cc.astype(np.int32)
    wf = (cf - f0).astype(np.float32).ravel()
    wr = (cr - r0).astype(np.float32).ravel()
    wc = (cc - c0).astype(np.float32).ravel()
    f0 = f0.ravel()
    r0 = r0.ravel()
    c0 = c0.ravel()
    f1 = np.minimum(f0 + 1, nf - 1)
    r1 = np.minimum(r0 + 1, nh - 1)
    c1 = np.minimum(c0 + 1, nw - 1)

    flat = data.reshape(-1, nc)
    hw = np.int32(nh * nw)
    w32 = np.int32(nw)
    base_f0 = f0 * hw
    base_f1 = f1 * hw
    row_r0 = r0 * w32
    row_r1 = r1 * w32

    out = np.zeros((f0.shape[0], nc), dtype=np.float32)
    onef = np.float32(1.0)
    for bf, wgt_f in ((base_f0, onef - wf), (base_f1, wf)):
        for rr, wgt_r in ((row_r0, onef - wr), (row_r1, wr)):
            wfr = wgt_f * wgt_r
            for cc_i, wgt_c in ((c0, onef - wc), (c1, wc)):
                idx = bf + rr + cc_i
                out += flat[idx] * (wfr * wgt_c)[:, None]
    return out.reshape(coords_f.shape + (nc,))


# --- spatial transforms ------------------------------------------------------

def rotate_small(v: Volume, rng: RandomStream, max_deg: float = 10.0) -> Volume:
    """Rotate every (H, W) plane by one shared random angle.

    The angle is drawn uniformly from [-max_deg, +max_deg]; interpolation is
    bilinear with zero fill outside the frame, so the intensity lower bound
    relaxes to min(0, min(v)).
    """
    if not 0.0 < max_deg <= 45.0:
        raise ValueError(f"max_deg must be in (0, 45], got {max_deg}")
    theta = float(rng.uniform(-max_deg, max_deg))
    return rotate_planes(v, theta)


def rotate_planes(v: Volume, angle_deg: float) -> Volume:
    """Deterministic in-plane rotation about each plane's center."""
    if angle_deg == 0.0:
        return v
    nf, nh, nw, nc = v.shape
    cy = (nh - 1) / 2.0
    cx = (nw - 1) / 2.0
    rad = math.radians(angle_deg)
    cos_t, sin_t = math.cos(rad), math.sin(rad)

    yy, xx = np.meshgrid(np.arange(nh, dtype=np.float64) - cy,
                         np.arange(nw, dtype=np.float64) - cx, indexing="ij")
    # Inverse map: sample the input at the backward-rotated output coordinate.
    src_y = cos_t * yy + sin_t * xx + cy
    src_x = -sin_t * yy + cos_t * xx + cx

    # One zero ring of padding makes out-of-frame samples blend to zero and
    # far-outside samples clamp onto zero texels.
    padded = np.zeros((nf, nh + 2, nw + 2, nc), dtype=v.dtype)
    padded[:, 1:-1, 1:-1, :] = v.data
    sy = np.clip(src_y + 1.0, 0.0, nh + 1)
    sx = np.clip(src_x + 1.0, 0.0, nw + 1)
    y0 = sy.astype(np.int32)
    x0 = sx.astype(np.int32)
    wy = (sy - y0).astype(np.float32).ravel()[:, None]
    wx = (sx - x0).astype(np.float32).ravel()[:, None]
    y1 = np.minimum(y0 + 1, nh + 1).ravel()
    x1 = np.minimum(x0 + 1, nw + 1).ravel()
    y0 = y0.ravel()
    x0 = x0.ravel()

    plane = padded.reshape(nf, (nh + 2) * (nw + 2), nc)
    stride = nw + 2
    i00 = y0 * stride + x0
    i01 = y0 * stride + x1
    i10 = y1 * stride + x0
    i11 = y1 * stride + x1

    top = plane[:, i00, :] * (1.0 - wx) + plane[:, i01, :] * wx
    bot = plane[:, i10, :] * (1.0 - wx) + plane[:, i11, :] * wx
    out = top * (1.0 - wy) + bot * wy
    return Volume(quantize_to(out.reshape(v.shape), v.dtype))


def elastic(v: Volume, rng: RandomStream, grid: int = 4, sigma: float = 6.0) -> Volume:
    """Elastic deformation driven by a coarse lattice of random displacements.

    A (grid, grid, grid, 3) lattice of N(0, sigma^2) voxel displacements is
    upsampled to full resolution by trilinear interpolation (lattice corners
    pinned to the volume corners), and the volume is resampled through the
    displaced coordinates with trilinear interpolation and edge clamping.
    """
    if grid < 2:
        raise ValueError(f"grid must be >= 2, got {grid}")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    lattice = rng.normal(size=(grid, grid, grid, 3), dtype=np.float32) * np.float32(sigma)
    if sigma == 0.0:
        return v
    field = _upsample_lattice(lattice, v.spatial_shape)
    nf, nh, nw = v.spatial_shape
    coords_f = field[..., 0] + np.arange(nf, dtype=np.float32)[:, None, None]
    coords_r = field[..., 1] + np.arange(nh, dtype=np.float32)[None, :, None]
    coords_c = field[..., 2] + np.arange(nw, dtype=np.float32)[None, None, :]
    sampled = _trilinear_gather(v.data, coords_f, coords_r, coords_c)
    return Volume(quantize_to(sampled, v.dtype))


def _upsample_lattice(lattice: np.ndarray, spatial_shape: tuple[int, int, int]) -> np.ndarray:
    """Expand a (g,g,g,3) lattice to (F,H,W,3) with per-axis linear interpolation."""
    g = lattice.shape[0]
    out = lattice
    for axis, extent in enumerate(spatial_shape):
        if extent == 1:
            sel = np.zeros(1, dtype=np.intp)
            out = np.take(out, sel, axis=axis)
            continue
        # Lattice nodes sit at k * (extent-1) / (g-1); invert for each voxel.
        s = np.arange(extent, dtype=np.float64) * ((g - 1) / (extent - 1))
        i0 = np.minimum(s.astype(np.intp), g - 2)
        w = (s - i0).astype(np.float32)
        lo = np.take(out, i0, axis=axis)
        hi = np.take(out, i0 + 1, axis=axis)
        wshape = [1] * out.ndim
        wshape[axis] = extent
        out = lo + (hi - lo) * w.reshape(wshape)
    return out


_ROT90_PLANES = ((Axis.HEIGHT, Axis.WIDTH), (Axis.FRAMES, Axis.HEIGHT),
                 (Axis.FRAMES, Axis.WIDTH))


def rotate90(v: Volume, rng: RandomStream) -> Volume:
    """Rotate by a random multiple of 90 degrees in a random axis plane."""
    plane = _ROT90_PLANES[int(rng.integers(0, 3))]
    k = int(rng.integers(0, 4))
    return rotate90_fixed(v, plane, k)


def rotate90_fixed(v: Volume, plane: tuple[Axis, Axis], k: int) -> Volume:
    if k % 4 == 0:
        return v
    axes = (int(plane[0]), int(plane[1]))
    return Volume(np.rot90(v.data, k=k % 4, axes=axes))


def flip(v: Volume, rng: RandomStream, p_axis: float = 0.5) -> Volume:
    """Independently mirror along each spatial axis with probability p_axis."""
    if not 0.0 <= p_axis <= 1.0:
        raise ValueError(f"p_axis must be in [0, 1], got {p_axis}")
    decisions = [bool(rng.uniform() < p_axis) for _ in range(3)]
    return flip_fixed(v, decisions)


def flip_fixed(v: Volume, decisions) -> Volume:
    axes = [a for a, d in zip(range(3), decisions) if d]
    if not axes:
        return v
    return Volume(np.flip(v.data, axis=axes))


def grid_dropout(v: Volume, rng: RandomStream, cell: int = 16, ratio: float = 0.5) -> Volume:
    """Zero a periodic 3-D grid of sub-blocks.

    Blocks of cell^3 voxels tile the volume starting at a random global
    offset in [0, cell) per axis; within each block the leading
    floor(ratio * cell) planes along every axis are zeroed.
    """
    if cell < 2:
        raise ValueError(f"cell must be >= 2, got {cell}")
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must be in [0, 1], got {ratio}")
    offsets = [int(rng.integers(0, cell)) for _ in range(3)]
    return grid_dropout_fixed(v, cell, ratio, offsets)


def grid_dropout_fixed(v: Volume, cell: int, ratio: float, offsets) -> Volume:
    hole = int(math.floor(ratio * cell))
    if hole == 0:
        return v
    masks = []
    for axis in range(3):
        coords = np.arange(v.shape[axis])
        masks.append(((coords - offsets[axis]) % cell) < hole)
    out = v.data.copy()
    out[np.ix_(masks[0], masks[1], masks[2])] = 0
    return Volume(out)


# --- pixel transforms --------------------------------------------------------

def gaussian_noise(v: Volume, rng: RandomStream, sigma_max: float = 10.0) -> Volume:
    """Add per-voxel Gaussian noise with a random strength.

    sigma is drawn uniformly from [0, sigma_max] in uint8 intensity units,
    then independent N(0, sigma^2) noise is added per voxel and channel.
    """
    if sigma_max < 0:
        raise ValueError(f"sigma_max must be >= 0, got {sigma_max}")
    sigma = float(rng.uniform(0.0, sigma_max))
    return add_gaussian_noise(v, rng, sigma)


def add_gaussian_noise(v: Volume, rng: RandomStream, sigma: float) -> Volume:
    if sigma == 0.0:
        return v
    noise = rng.normal(size=v.shape, dtype=np.float32) * np.float32(sigma)
    return Volume(quantize_to(v.data.astype(np.float32) + noise, v.dtype))


def random_gamma(v: Volume, rng: RandomStream, lo: float = 0.8, hi: float = 1.2) -> Volume:
    """Apply a random gamma intensity curve (monotone, no spatial blur)."""
    if not 0.0 < lo <= hi:
        raise ValueError(f"need 0 < lo <= hi, got ({lo}, {hi})")
    gamma = float(rng.uniform(lo, hi))
    return apply_gamma(v, gamma)


def apply_gamma(v: Volume, gamma: float) -> Volume:
    """Map x to 255*(x/255)^gamma for uint8.

    Float volumes are min-max normalised, exponentiated, and rescaled back;
    a constant float volume has a degenerate range and is returned unchanged.
    """
    if gamma == 1.0:
        return v
    if v.dtype == np.uint8:
        levels = np.arange(256, dtype=np.float64) / 255.0
        lut = quantize_to(255.0 * np.power(levels, gamma), np.uint8)
        return Volume(lut[v.data])
    mn = float(v.data.min())
    mx = float(v.data.max())
    if mx == mn:
        return v
    u = (v.data.astype(np.float64) - mn) / (mx - mn)
    return Volume((mn + (mx - mn) * np.power(u, gamma)).astype(np.float32))


# --- custom transforms ---------------------------------------------------------

def crop_from_borders(v: Volume, rng: RandomStream, max_frac: float = 0.1) -> Volume:
    """Delete a random strip of planes from one border of one axis."""
    if not 0.0 <= max_frac < 0.5:
        raise ValueError(f"max_frac must be in [0, 0.5), got {max_frac}")
    axis = int(rng.integers(0, 3))
    leading = bool(rng.integers(0, 2) == 0)
    extent = v.shape[axis]
    max_n = int(math.floor(max_frac * extent))
    n = int(rng.integers(0, max_n + 1))
    if n == 0:
        return v
    sel = [slice(None)] * 4
    sel[axis] = slice(n, extent) if leading else slice(0, extent - n)
    return Volume(v.data[tuple(sel)])


def drop_plane(v: Volume, rng: RandomStream, max_frac: float = 0.1) -> Volume:
    """Delete random interior 2-D planes from one axis.

    The first and last plane of the chosen axis always survive, and the
    relative order of the remaining planes is preserved. Axes shorter than
    3 are never chosen; if all are too short, AxisTooShort is raised.
    """
    if not 0.0 <= max_frac < 0.5:
        raise ValueError(f"max_frac must be in [0, 0.5), got {max_frac}")
    eligible = [a for a in range(3) if v.shape[a] >= 3]
    if not eligible:
        raise AxisTooShort(f"every axis of {v.spatial_shape} has extent < 3")
    axis = eligible[int(rng.integers(0, len(eligible)))]
    extent = v.shape[axis]
    max_k = int(math.floor(max_frac * (extent - 2)))
    k = int(rng.integers(0, max_k + 1))
    if k == 0:
        return v
    interior = np.arange(1, extent - 1)
    dropped = np.sort(rng.sample_without_replacement(interior, k))
    return Volume(np.delete(v.data, dropped, axis=axis))


def resize(v: Volume, target: tuple[int, int, int], mode: str = "trilinear") -> Volume:
    """Resample to a fixed spatial shape (trilinear or nearest)."""
    target = tuple(int(t) for t in target)
    if len(target) != 3 or min(target) < 1:
        raise ValueError(f"target must be three extents >= 1, got {target}")
    if mode not in ("trilinear", "nearest"):
        raise ValueError(f"mode must be 'trilinear' or 'nearest', got {mode!r}")
    if target == v.spatial_shape:
        return v
    if mode == "nearest":
        out = v.data
        for axis in range(3):
            if out.shape[axis] != target[axis]:
                idx = _axis_nearest_indices(out.shape[axis], target[axis])
                out = np.take(out, idx, axis=axis)
        return Volume(out)
    return Volume(quantize_to(_resize_trilinear(v.data, target), v.dtype))
