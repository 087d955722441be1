"""Probability-gated transform pipelines with deterministic per-sample seeding.

A pipeline is an ordered list of steps, each a transform id, a parameter
record, and a firing probability. Applying a pipeline to sample ``i`` gives
step ``j`` its own stream seeded by ``mix64(mix64(seed, i), j)``; the first
uniform draw from that stream gates the step, and the transform consumes the
remainder. Steps therefore never share randomness: toggling one step's
probability leaves every other step's draws untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Callable, Mapping

from . import transforms as T
from .errors import SchemaError
from .rng import RandomStream, mix64
from .volume import Volume

MAX_SEED = 2**64 - 1


def _apply_resize(v: Volume, rng: RandomStream, target, mode: str = "trilinear") -> Volume:
    return T.resize(v, tuple(target), mode)


_OPS: dict[str, Callable[..., Volume]] = {
    "rotate_small": T.rotate_small,
    "elastic": T.elastic,
    "rotate90": T.rotate90,
    "flip": T.flip,
    "grid_dropout": T.grid_dropout,
    "gaussian_noise": T.gaussian_noise,
    "random_gamma": T.random_gamma,
    "crop_from_borders": T.crop_from_borders,
    "drop_plane": T.drop_plane,
    "resize": _apply_resize,
}

# name -> (validator, error message); validators run on parse and construction.
_PARAM_CHECKS: dict[str, dict[str, tuple[Callable[[Any], bool], str]]] = {
    "rotate_small": {
        "max_deg": (lambda x: _is_num(x) and 0 < x <= 45, "must be in (0, 45]"),
    },
    "elastic": {
        "grid": (lambda x: _is_int(x) and x >= 2, "must be an integer >= 2"),
        "sigma": (lambda x: _is_num(x) and x >= 0, "must be >= 0"),
    },
    "rotate90": {},
    "flip": {
        "p_axis": (lambda x: _is_num(x) and 0 <= x <= 1, "must be in [0, 1]"),
    },
    "grid_dropout": {
        "cell": (lambda x: _is_int(x) and x >= 2, "must be an integer >= 2"),
        "ratio": (lambda x: _is_num(x) and 0 <= x <= 1, "must be in [0, 1]"),
    },
    "gaussian_noise": {
        "sigma_max": (lambda x: _is_num(x) and x >= 0, "must be >= 0"),
    },
    "random_gamma": {
        "lo": (lambda x: _is_num(x) and x > 0, "must be > 0"),
        "hi": (lambda x: _is_num(x) and x > 0, "must be > 0"),
    },
    "crop_from_borders": {
        "max_frac": (lambda x: _is_num(x) and 0 <= x < 0.5, "must be in [0, 0.5)"),
    },
    "drop_plane": {
        "max_frac": (lambda x: _is_num(x) and 0 <= x < 0.5, "must be in [0, 0.5)"),
    },
    "resize": {
        "target": (lambda x: isinstance(x, (list, tuple)) and len(x) == 3
                   and all(_is_int(t) and t >= 1 for t in x),
                   "must be three integer extents >= 1"),
        "mode": (lambda x: x in ("trilinear", "nearest"),
                 "must be 'trilinear' or 'nearest'"),
    },
}

_REQUIRED_PARAMS = {"resize": ("target",)}


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


@dataclass(frozen=True)
class Step:
    """One pipeline entry: a transform id, firing probability, and parameters."""

    op: str
    p: float
    params: Mapping[str, Any]

    def to_dict(self) -> dict:
        return {"op": self.op, "p": self.p, "params": dict(self.params)}


@dataclass(frozen=True)
class Pipeline:
    """Immutable ordered list of probability-gated transform steps."""

    seed: int
    steps: tuple[Step, ...]

    def __post_init__(self):
        if not _is_int(self.seed) or not 0 <= self.seed <= MAX_SEED:
            raise SchemaError(f"seed: must be an integer in [0, 2^64), got {self.seed!r}")
        object.__setattr__(self, "steps", tuple(self.steps))
        for i, step in enumerate(self.steps):
            _validate_step(i, step.op, step.p, step.params)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "steps": [s.to_dict() for s in self.steps]}


def _validate_step(i: int, op, p, params) -> None:
    if op not in _OPS:
        raise SchemaError(f"step {i}: op: unknown transform {op!r}")
    if not _is_num(p) or not 0.0 <= p <= 1.0:
        raise SchemaError(f"step {i}: p: must be a number in [0, 1], got {p!r}")
    checks = _PARAM_CHECKS[op]
    for name in _REQUIRED_PARAMS.get(op, ()):
        if name not in params:
            raise SchemaError(f"step {i}: params.{name}: required for op {op!r}")
    for name, value in params.items():
        if name not in checks:
            raise SchemaError(f"step {i}: params.{name}: unknown parameter for op {op!r}")
        ok, msg = checks[name]
        if not ok(value):
            raise SchemaError(f"step {i}: params.{name}: {msg}, got {value!r}")
    if op == "random_gamma":
        lo = params.get("lo", 0.8)
        hi = params.get("hi", 1.2)
        if lo > hi:
            raise SchemaError(f"step {i}: params.lo: must satisfy lo <= hi, got ({lo}, {hi})")


def apply(pipe: Pipeline, v: Volume, sample_index: int) -> Volume:
    """Run every firing step on one sample.

    Parameters
    ----------
    pipe : Pipeline
    v : Volume
    sample_index : int
        Non-negative index identifying the sample; together with the
        pipeline seed it fully determines every random draw.

    Returns
    -------
    Volume
        The transformed sample. Bit-identical across repeat calls.
    """
    return apply_traced(pipe, v, sample_index)[0]


def apply_traced(pipe: Pipeline, v: Volume, sample_index: int) -> tuple[Volume, list[dict]]:
    """Like apply, also returning which steps fired as [{"step", "op"}, ...]."""
    if sample_index < 0:
        raise ValueError(f"sample_index must be >= 0, got {sample_index}")
    sample_key = mix64(pipe.seed, sample_index)
    fired: list[dict] = []
    for i, step in enumerate(pipe.steps):
        stream = RandomStream(mix64(sample_key, i))
        gate = float(stream.uniform())
        if gate >= step.p:
            continue
        try:
            v = _OPS[step.op](v, stream, **step.params)
        except Exception as e:
            raise type(e)(f"step {i} ({step.op}): {e}") from e
        fired.append({"step": i, "op": step.op})
    return v, fired


def preset_heavy_augs(target_shape: tuple[int, int, int], seed: int = 0) -> Pipeline:
    """The ten-step heavy augmentation protocol, resize last."""
    mk = Step
    return Pipeline(seed=seed, steps=(
        mk("rotate_small", 0.3, {"max_deg": 10}),
        mk("elastic", 0.1, {"grid": 4, "sigma": 6.0}),
        mk("rotate90", 1.0, {}),
        mk("flip", 0.5, {"p_axis": 0.5}),
        mk("grid_dropout", 0.1, {"cell": 16, "ratio": 0.5}),
        mk("gaussian_noise", 0.2, {"sigma_max": 10.0}),
        mk("random_gamma", 0.2, {"lo": 0.8, "hi": 1.2}),
        mk("crop_from_borders", 0.4, {"max_frac": 0.1}),
        mk("drop_plane", 0.5, {"max_frac": 0.1}),
        mk("resize", 1.0, {"target": list(target_shape), "mode": "trilinear"}),
    ))


def preset_mirror3(target_shape: tuple[int, int, int], seed: int = 0) -> Pipeline:
    """Independent mirroring along all three axes, then resize."""
    return Pipeline(seed=seed, steps=(
        Step("flip", 1.0, {"p_axis": 0.5}),
        Step("resize", 1.0, {"target": list(target_shape), "mode": "trilinear"}),
    ))


def serialize(pipe: Pipeline) -> str:
    """Render a pipeline as canonical JSON text."""
    return json.dumps(pipe.to_dict(), indent=2) + "\n"


def parse(text: str) -> Pipeline:
    """Parse pipeline JSON, rejecting unknown ops and out-of-range values."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaError(f"top level must be an object, got {type(doc).__name__}")
    unknown = set(doc) - {"seed", "steps"}
    if unknown:
        raise SchemaError(f"unknown top-level keys: {sorted(unknown)}")
    if "seed" not in doc:
        raise SchemaError("seed: missing")
    if "steps" not in doc:
        raise SchemaError("steps: missing")
    if not isinstance(doc["steps"], list):
        raise SchemaError("steps: must be a list")
    steps = []
    for i, raw in enumerate(doc["steps"]):
        if not isinstance(raw, dict):
            raise SchemaError(f"step {i}: must be an object")
        unknown = set(raw) - {"op", "p", "params"}
        if unknown:
            raise SchemaError(f"step {i}: unknown keys: {sorted(unknown)}")
        for field in ("op", "p"):
            if field not in raw:
                raise SchemaError(f"step {i}: {field}: missing")
        params = raw.get("params", {})
        if not isinstance(params, dict):
            raise SchemaError(f"step {i}: params: must be an object")
        steps.append(Step(raw["op"], raw["p"], params))
    return Pipeline(seed=doc["seed"], steps=tuple(steps))


def load(path) -> Pipeline:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


def save(pipe: Pipeline, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(pipe))
