"""Bit-exact file formats.

VOX1 is a raw volume container: a fixed 24-byte header (magic "VOX1",
version, dtype code, reserved zero byte, four u32 extents) followed by
C-order voxel data, everything little-endian. TMAP is a tensor container
byte-compatible with the safetensors layout (u64 JSON-header length,
JSON name table with data_offsets, contiguous data region) so external
checkpoints can be ingested directly. PNG stacks and the prediction /
probability-matrix CSVs round out the interchange surface.

Every reader validates sizes against the header before touching payload
bytes, and every read/write pair is a bit-exact inverse.
"""

from __future__ import annotations

import json
import re
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (BadMagic, DtypeUnknown, IOFormatError, JsonMalformed,
                     MixedDimensions, NonContiguousIndices,
                     OverlappingOffsets, RangeError, SchemaError,
                     TruncatedFile)
from .metrics import Prediction, PredictionSet
from .reliability import ProbMatrix, ReliabilityBin
from .volume import Volume

_VOX1_MAGIC = b"VOX1"
_VOX1_HEADER = struct.Struct("<4sHBB4I")
_VOX1_DTYPES = {0: np.dtype(np.uint8), 1: np.dtype(np.float32)}
_VOX1_CODES = {v: k for k, v in _VOX1_DTYPES.items()}


# --- VOX1 volumes ------------------------------------------------------------

def write_vox1_array(path, arr: np.ndarray) -> None:
    """Write a 4-D uint8/float32 array as a VOX1 file."""
    arr = np.ascontiguousarray(arr)
    if arr.ndim != 4:
        raise IOFormatError(f"VOX1 stores 4-D arrays, got shape {arr.shape}")
    code = _VOX1_CODES.get(arr.dtype)
    if code is None:
        raise DtypeUnknown(f"VOX1 stores uint8 or float32, got {arr.dtype}")
    if min(arr.shape) < 1 or max(arr.shape) > 0xFFFFFFFF:
        raise IOFormatError(f"extents must fit in u32 and be >= 1, got {arr.shape}")
    header = _VOX1_HEADER.pack(_VOX1_MAGIC, 1, code, 0, *arr.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        if arr.dtype == np.float32:
            fh.write(arr.astype("<f4", copy=False).tobytes())
        else:
            fh.write(arr.tobytes())


def read_vox1_array(path) -> np.ndarray:
    """Read a VOX1 file as a raw (F, H, W, C) array, any channel count."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _VOX1_HEADER.size:
        raise TruncatedFile(f"{path}: {len(raw)} bytes, header needs "
                            f"{_VOX1_HEADER.size}")
    magic, version, code, reserved, f, h, w, c = _VOX1_HEADER.unpack_from(raw)
    if magic != _VOX1_MAGIC:
        raise BadMagic(f"{path}: magic {magic!r}, expected {_VOX1_MAGIC!r}")
    if version != 1:
        raise IOFormatError(f"{path}: unsupported VOX1 version {version}")
    if reserved != 0:
        raise IOFormatError(f"{path}: reserved header byte is {reserved}, not 0")
    dtype = _VOX1_DTYPES.get(code)
    if dtype is None:
        raise DtypeUnknown(f"{path}: unknown dtype code {code}")
    if min(f, h, w, c) < 1:
        raise IOFormatError(f"{path}: zero extent in dims {(f, h, w, c)}")
    expected = f * h * w * c * dtype.itemsize
    payload = len(raw) - _VOX1_HEADER.size
    if payload < expected:
        raise TruncatedFile(f"{path}: {payload} data bytes, header declares "
                            f"{expected}")
    if payload > expected:
        raise IOFormatError(f"{path}: {payload - expected} trailing bytes "
                            f"after declared data")
    arr = np.frombuffer(raw, dtype=dtype.newbyteorder("<"),
                        offset=_VOX1_HEADER.size).reshape(f, h, w, c)
    return arr.astype(dtype, copy=False)


def write_vox1(path, v: Volume) -> None:
    write_vox1_array(path, v.data)


def read_vox1(path) -> Volume:
    return Volume(read_vox1_array(path))


# --- TMAP tensor containers --------------------------------------------------

_TMAP_DTYPES = {"U8": np.dtype(np.uint8), "F32": np.dtype(np.float32),
                "F64": np.dtype(np.float64)}
_TMAP_NAMES = {v: k for k, v in _TMAP_DTYPES.items()}


def write_tmap(path, tensors: dict[str, np.ndarray]) -> None:
    """Write named tensors as a TMAP container (safetensors layout).

    Tensors are laid out in dict order; dtypes limited to uint8,
    float32, and float64.
    """
    entries = {}
    blobs = []
    offset = 0
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr)
        tag = _TMAP_NAMES.get(arr.dtype)
        if tag is None:
            raise DtypeUnknown(f"tensor {name!r}: TMAP stores "
                               f"{sorted(_TMAP_DTYPES)}, got {arr.dtype}")
        blob = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
        entries[name] = {"dtype": tag, "shape": list(arr.shape),
                         "data_offsets": [offset, offset + len(blob)]}
        blobs.append(blob)
        offset += len(blob)
    header = json.dumps(entries, separators=(",", ":")).encode("utf-8")
    pad = -(8 + len(header)) % 8
    header += b" " * pad
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def read_tmap(path) -> dict[str, np.ndarray]:
    """Read a TMAP container; iteration order follows the JSON name table."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise TruncatedFile(f"{path}: {len(raw)} bytes, need 8 for header length")
    (hlen,) = struct.unpack_from("<Q", raw)
    if len(raw) < 8 + hlen:
        raise TruncatedFile(f"{path}: header declares {hlen} JSON bytes, "
                            f"{len(raw) - 8} present")
    try:
        table = json.loads(raw[8:8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise JsonMalformed(f"{path}: bad header JSON: {e}") from e
    if not isinstance(table, dict):
        raise JsonMalformed(f"{path}: header must be a JSON object")
    table.pop("__metadata__", None)

    data = raw[8 + hlen:]
    out: dict[str, np.ndarray] = {}
    cursor = 0
    for name, entry in table.items():
        if (not isinstance(entry, dict)
                or set(entry) != {"dtype", "shape", "data_offsets"}):
            raise JsonMalformed(f"{path}: tensor {name!r}: entry must have "
                                f"exactly dtype/shape/data_offsets")
        dtype = _TMAP_DTYPES.get(entry["dtype"])
        if dtype is None:
            raise DtypeUnknown(f"{path}: tensor {name!r}: dtype "
                               f"{entry['dtype']!r}")
        shape = entry["shape"]
        offs = entry["data_offsets"]
        if (not isinstance(shape, list)
                or not all(isinstance(s, int) and s >= 0 for s in shape)):
            raise JsonMalformed(f"{path}: tensor {name!r}: bad shape {shape!r}")
        if (not isinstance(offs, list) or len(offs) != 2
                or not all(isinstance(o, int) and o >= 0 for o in offs)):
            raise JsonMalformed(f"{path}: tensor {name!r}: bad data_offsets "
                                f"{offs!r}")
        b, e = offs
        n_bytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        if e - b != n_bytes:
            raise JsonMalformed(f"{path}: tensor {name!r}: shape {shape} is "
                                f"{n_bytes} bytes, offsets span {e - b}")
        if b != cursor:
            raise OverlappingOffsets(f"{path}: tensor {name!r}: starts at "
                                     f"{b}, expected {cursor} (offsets must "
                                     f"tile the data region in order)")
        if e > len(data):
            raise TruncatedFile(f"{path}: tensor {name!r}: needs bytes up to "
                                f"{e}, data region has {len(data)}")
        cursor = e
        arr = np.frombuffer(data, dtype=dtype.newbyteorder("<"),
                            offset=b, count=int(np.prod(shape, dtype=np.int64)))
        out[name] = arr.reshape(shape).astype(dtype, copy=False)
    if cursor != len(data):
        raise OverlappingOffsets(f"{path}: {len(data) - cursor} data bytes "
                                 f"not covered by any tensor")
    return out


# --- PNG frame stacks --------------------------------------------------------

_FRAME_RE = re.compile(r"frame_(\d{5})\.png$")


def write_png_stack(dirpath, v: Volume) -> None:
    """Write a uint8 volume as frame_00000.png .. frame_{F-1:05d}.png."""
    if v.dtype != np.uint8:
        raise IOFormatError(f"PNG stacks store uint8 volumes, got {v.dtype}")
    d = Path(dirpath)
    d.mkdir(parents=True, exist_ok=True)
    for i in range(v.frames):
        frame = v.data[i]
        img = Image.fromarray(frame[:, :, 0] if v.channels == 1 else frame)
        img.save(d / f"frame_{i:05d}.png")


def read_png_stack(dirpath) -> Volume:
    """Stack frame_%05d.png files (contiguous from 0) into a Volume."""
    d = Path(dirpath)
    found = {}
    for p in d.iterdir():
        m = _FRAME_RE.fullmatch(p.name)
        if m:
            found[int(m.group(1))] = p
    if not found:
        raise NonContiguousIndices(f"{d}: no frame_%05d.png files")
    indices = sorted(found)
    if indices != list(range(len(indices))):
        missing = sorted(set(range(indices[-1] + 1)) - set(indices))
        raise NonContiguousIndices(f"{d}: frame indices must start at 0 and "
                                   f"be contiguous; missing {missing[:5]}")
    frames = []
    ref = None
    for i in indices:
        img = Image.open(found[i])
        if img.mode == "L":
            arr = np.asarray(img)[:, :, None]
        elif img.mode == "RGB":
            arr = np.asarray(img)
        else:
            raise MixedDimensions(f"{found[i]}: mode {img.mode}, expected "
                                  f"8-bit L or RGB")
        if ref is None:
            ref = arr.shape
        elif arr.shape != ref:
            raise MixedDimensions(f"{found[i]}: shape {arr.shape} != first "
                                  f"frame {ref}")
        frames.append(arr)
    return Volume(np.stack(frames, axis=0))


# --- prediction CSVs ---------------------------------------------------------

def _split_csv_line(line: str, n_fields: int, lineno: int, path) -> list[str]:
    parts = line.rstrip("\r\n").split(",")
    if len(parts) != n_fields:
        raise SchemaError(f"{path}: expected {n_fields} fields, got "
                          f"{len(parts)}", line=lineno)
    return parts


def _parse_score(text: str, lineno: int, path, what: str = "score") -> float:
    try:
        value = float(text)
    except ValueError as e:
        raise SchemaError(f"{path}: {what} {text!r} is not a number",
                          line=lineno) from e
    if not 0.0 <= value <= 1.0:
        raise RangeError(f"{path}: {what} {value} outside [0, 1]", line=lineno)
    return value


def _parse_label(text: str, lineno: int, path) -> int:
    if text not in ("0", "1"):
        raise RangeError(f"{path}: label {text!r} must be 0 or 1", line=lineno)
    return int(text)


def read_predictions(path) -> PredictionSet:
    """Parse a strict `sample_id,score,label[,fold]` CSV."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty file", line=1)
    header = lines[0]
    if header == "sample_id,score,label":
        has_fold = False
    elif header == "sample_id,score,label,fold":
        has_fold = True
    else:
        raise SchemaError(f"{path}: bad header {header!r}", line=1)
    n_fields = 4 if has_fold else 3
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = _split_csv_line(line, n_fields, lineno, path)
        sid = parts[0]
        if not sid:
            raise SchemaError(f"{path}: empty sample_id", line=lineno)
        score = _parse_score(parts[1], lineno, path)
        label = _parse_label(parts[2], lineno, path)
        fold = None
        if has_fold:
            try:
                fold = int(parts[3])
            except ValueError as e:
                raise SchemaError(f"{path}: fold {parts[3]!r} is not an "
                                  f"integer", line=lineno) from e
            if fold < 0:
                raise RangeError(f"{path}: fold {fold} must be >= 0",
                                 line=lineno)
        records.append(Prediction(sid, score, label, fold))
    try:
        return PredictionSet(tuple(records))
    except ValueError as e:
        raise SchemaError(f"{path}: {e}") from e


def write_predictions(path, p: PredictionSet) -> None:
    has_fold = any(r.fold is not None for r in p)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("sample_id,score,label,fold\n" if has_fold
                 else "sample_id,score,label\n")
        for r in p:
            base = f"{r.sample_id},{r.score!r},{r.label}"
            fh.write(f"{base},{r.fold}\n" if has_fold else f"{base}\n")


def read_probmatrix(path) -> ProbMatrix:
    """Parse a strict `sample_id,label,p_0,...,p_{T-1}` CSV."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty file", line=1)
    cols = lines[0].split(",")
    t = len(cols) - 2
    if (t < 2 or cols[0] != "sample_id" or cols[1] != "label"
            or cols[2:] != [f"p_{i}" for i in range(t)]):
        raise SchemaError(f"{path}: bad header {lines[0]!r}", line=1)
    ids: list[str] = []
    labels: list[int] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = _split_csv_line(line, t + 2, lineno, path)
        sid = parts[0]
        if not sid:
            raise SchemaError(f"{path}: empty sample_id", line=lineno)
        if sid in seen:
            raise SchemaError(f"{path}: duplicate sample_id {sid!r}",
                              line=lineno)
        seen.add(sid)
        ids.append(sid)
        labels.append(_parse_label(parts[1], lineno, path))
        rows.append([_parse_score(cell, lineno, path, what=f"p_{i}")
                     for i, cell in enumerate(parts[2:])])
    if not ids:
        raise SchemaError(f"{path}: no data rows", line=2)
    return ProbMatrix(tuple(ids), np.array(labels, dtype=np.int64),
                      np.array(rows, dtype=np.float64))


def write_probmatrix(path, m: ProbMatrix) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("sample_id,label," +
                 ",".join(f"p_{i}" for i in range(m.n_draws)) + "\n")
        for sid, label, row in zip(m.sample_ids, m.labels, m.probs):
            fh.write(f"{sid},{int(label)}," +
                     ",".join(repr(float(x)) for x in row) + "\n")


def write_reliability_csv(path, bins: list[ReliabilityBin]) -> None:
    """Write reliability bins as `bin_lo,bin_hi,mean_pred,pos_rate,count`."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("bin_lo,bin_hi,mean_pred,pos_rate,count\n")
        for b in bins:
            fh.write(f"{b.lo!r},{b.hi!r},{b.mean_pred!r},{b.pos_rate!r},"
                     f"{b.count}\n")
