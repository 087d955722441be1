"""The voxflow command line.

Every capability is a subcommand over files. stdout carries only
machine-readable payload (JSON or CSV); diagnostics go to stderr. Exit
codes are fixed so scripts can branch without parsing messages:

    0  success
    2  I/O error (missing or malformed binary/image file, usage error)
    3  schema error (malformed CSV/JSON text, bad values)
    4  shape error (dimension mismatch)
    5  infeasible request (empty/one-class sets, impossible batches)

Report-producing commands (calibrate, uncertainty, roi-stats) render a
matplotlib PNG next to each CSV they write.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import bench as bench_mod
from . import formats, heatmap, metrics, pipeline, reliability, roi, sampler
from .errors import (InfeasibleError, IOFormatError, SchemaError, ShapeError,
                     VoxflowError)
from .inflate import InflationMode, inflate_map
from .rng import RandomStream
from .volume import Cuboid, Volume, crop


def _parse_shape(text: str, n: int) -> tuple[int, ...]:
    parts = text.split(",")
    if len(parts) != n or not all(p.strip().lstrip("-").isdigit() for p in parts):
        raise SchemaError(f"expected {n} comma-separated integers, got {text!r}")
    shape = tuple(int(p) for p in parts)
    if min(shape) < 1:
        raise SchemaError(f"extents must be >= 1, got {text!r}")
    return shape


def _read_volume(path: Path) -> Volume:
    if path.is_dir():
        return formats.read_png_stack(path)
    return formats.read_vox1(path)


def _emit(doc) -> None:
    sys.stdout.write(json.dumps(doc, sort_keys=True) + "\n")


# --- augment -----------------------------------------------------------------

def _load_pipeline(args) -> pipeline.Pipeline:
    if args.pipeline:
        pipe = pipeline.load(args.pipeline)
    else:
        target = _parse_shape(args.target, 3)
        maker = (pipeline.preset_heavy_augs if args.preset == "heavy"
                 else pipeline.preset_mirror3)
        pipe = maker(target)
    if args.seed is not None:
        pipe = pipeline.Pipeline(seed=args.seed, steps=pipe.steps)
    return pipe


def cmd_augment(args) -> int:
    pipe = _load_pipeline(args)
    src = Path(args.in_path)
    if src.is_dir() and not (src / "frame_00000.png").exists():
        return _augment_batch(args, pipe, src)
    v = _read_volume(src)
    out, fired = pipeline.apply_traced(pipe, v, args.index)
    formats.write_vox1(args.out, out)
    _emit({"fired": fired, "out_shape": list(out.shape)})
    return 0


def _augment_batch(args, pipe: pipeline.Pipeline, src: Path) -> int:
    files = sorted(p for p in src.iterdir() if p.suffix == ".vox")
    if not files:
        raise IOFormatError(f"{src}: no .vox files to augment")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def run(rank_and_path):
        rank, path = rank_and_path
        out, fired = pipeline.apply_traced(pipe, formats.read_vox1(path), rank)
        formats.write_vox1(out_dir / path.name, out)
        return path.name, fired

    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        results = dict(pool.map(run, enumerate(files)))
    _emit({name: results[name] for name in sorted(results)})
    return 0


# --- inflate -----------------------------------------------------------------

_MODES = {"center": InflationMode.CENTER_PLANE, "average": InflationMode.AVERAGED}


def _load_rules(args) -> list[tuple[str, int, InflationMode]]:
    if args.rules:
        try:
            doc = json.loads(Path(args.rules).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise SchemaError(f"{args.rules}: not valid JSON: {e}") from e
        if not isinstance(doc, list):
            raise SchemaError(f"{args.rules}: rules must be a JSON list")
        rules = []
        for i, entry in enumerate(doc):
            if (not isinstance(entry, dict)
                    or set(entry) != {"pattern", "depth", "mode"}):
                raise SchemaError(f"{args.rules}: rule {i}: must have exactly "
                                  f"pattern/depth/mode")
            if entry["mode"] not in _MODES:
                raise SchemaError(f"{args.rules}: rule {i}: mode must be "
                                  f"'center' or 'average', got {entry['mode']!r}")
            if not isinstance(entry["depth"], int) or entry["depth"] < 1:
                raise SchemaError(f"{args.rules}: rule {i}: depth must be an "
                                  f"integer >= 1")
            rules.append((entry["pattern"], entry["depth"], _MODES[entry["mode"]]))
        return rules
    if args.depth is None:
        raise SchemaError("either --rules or --depth (with --mode) is required")
    return [("*", args.depth, _MODES[args.mode])]


def cmd_inflate(args) -> int:
    tensors = formats.read_tmap(args.in_path)
    rules = _load_rules(args)
    out = inflate_map(tensors, rules)
    formats.write_tmap(args.out, out)
    sys.stdout.write("tensor,old_shape,new_shape\n")
    for name in tensors:
        old = "x".join(map(str, tensors[name].shape))
        new = "x".join(map(str, out[name].shape))
        sys.stdout.write(f"{name},{old},{new}\n")
    return 0


# --- eval / calibrate / uncertainty ------------------------------------------

def _confusion_doc(c: metrics.Confusion) -> dict:
    return {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn}


def cmd_eval(args) -> int:
    preds = formats.read_predictions(args.pred)
    if args.folds:
        by_fold: dict[int, list] = {}
        for r in preds:
            if r.fold is None:
                raise SchemaError(f"{args.pred}: --folds needs a fold column "
                                  f"on every row")
            by_fold.setdefault(r.fold, []).append(r)
        folds = [metrics.PredictionSet(tuple(by_fold[k]))
                 for k in sorted(by_fold)]
        conf, mcc_val, auc = metrics.pooled_cv(folds, args.threshold)
    else:
        conf = metrics.confusion(preds, args.threshold)
        mcc_val = metrics.mcc(conf)
        auc = metrics.roc_auc(preds)
    _emit({"mcc": mcc_val, "auc": auc, "tpr": metrics.tpr(conf),
           "fpr": metrics.fpr(conf), "confusion": _confusion_doc(conf)})
    return 0


def cmd_calibrate(args) -> int:
    from . import plots

    preds = formats.read_predictions(args.pred)
    rng = RandomStream(args.seed if args.seed is not None else 0)
    calibrated, model = reliability.calibrate_split(preds, rng)
    held_out_ids = {r.sample_id for r in calibrated}
    before = metrics.PredictionSet(tuple(
        r for r in preds if r.sample_id in held_out_ids))
    err_before = reliability.binned_calibration_error(before, args.bins)
    err_after = reliability.binned_calibration_error(calibrated, args.bins)

    formats.write_predictions(args.out_pred, calibrated)
    bins = reliability.reliability_bins(calibrated, args.bins)
    formats.write_reliability_csv(args.out_reliability, bins)
    fig_path = Path(args.out_reliability).with_suffix(".png")
    plots.reliability_figure(bins, fig_path, title="Calibrated reliability")

    _emit({"error_before": err_before, "error_after": err_after,
           "n_calibrated": len(calibrated),
           "model_breakpoints": len(model.breakpoints)})
    return 0


def cmd_uncertainty(args) -> int:
    from . import plots

    matrix = formats.read_probmatrix(args.probmat)
    stats = reliability.mc_dropout_stats(matrix, spread=args.spread)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("sample_id,label,mean,std,spread\n")
        for i, sid in enumerate(stats.sample_ids):
            fh.write(f"{sid},{int(stats.labels[i])},{float(stats.mean[i])!r},"
                     f"{float(stats.std[i])!r},{float(stats.spread[i])!r}\n")
    plots.uncertainty_figure(stats, Path(args.out).with_suffix(".png"))
    _emit({"class0": {"mean_spread": stats.class_spread_mean[0],
                      "std_spread": stats.class_spread_std[0]},
           "class1": {"mean_spread": stats.class_spread_mean[1],
                      "std_spread": stats.class_spread_std[1]},
           "n_samples": matrix.n_samples, "n_draws": matrix.n_draws})
    return 0


# --- roi ----------------------------------------------------------------------

def _color_rule(args) -> roi.ColorRule:
    return roi.ColorRule(hue_lo=args.hue_lo, hue_hi=args.hue_hi,
                         s_min=args.s_min, v_min=args.v_min)


def cmd_roi(args) -> int:
    v = _read_volume(Path(args.frames))
    cuboid = roi.roi_cuboid(v, _color_rule(args), pad=args.pad)
    formats.write_vox1(args.out, crop(v, cuboid))
    _emit(cuboid.to_dict())
    return 0


def cmd_roi_stats(args) -> int:
    from . import plots

    try:
        doc = json.loads(Path(args.cuboids).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"{args.cuboids}: not valid JSON: {e}") from e
    if not isinstance(doc, list) or not doc:
        raise SchemaError(f"{args.cuboids}: expected a non-empty JSON list "
                          f"of cuboids")
    try:
        cuboids = [Cuboid.from_dict(d) for d in doc]
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"{args.cuboids}: bad cuboid entry: {e}") from e
    stats = roi.roi_stats(cuboids, bin_width=args.bin_width)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("axis,mean,p5,p25,p50,p75,p95\n")
        for name, st in stats.items():
            pct = ",".join(repr(st.percentiles[q]) for q in (5, 25, 50, 75, 95))
            fh.write(f"{name},{st.mean!r},{pct}\n")
    plots.roi_figure(stats, Path(args.out).with_suffix(".png"))
    _emit({name: {"mean": st.mean, "p50": st.percentiles[50]}
           for name, st in stats.items()})
    return 0


# --- heatmap / sample / bench ---------------------------------------------------

def cmd_heatmap(args) -> int:
    features = formats.read_vox1_array(args.features)
    input_v = formats.read_vox1(args.input)
    hm = heatmap.heatmap_from_features(features)
    overlay = heatmap.upscale_overlay(hm, input_v, factor=args.factor,
                                      alpha=args.alpha)
    out = Path(args.out)
    if out.suffix == ".vox":
        formats.write_vox1(out, overlay)
    else:
        formats.write_png_stack(out, overlay)
    if args.out_heatmap:
        formats.write_vox1(args.out_heatmap, hm)
    _emit({"heatmap_shape": list(hm.shape), "overlay_shape": list(overlay.shape)})
    return 0


def _read_labels_csv(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "sample_id,label":
        raise SchemaError(f"{path}: expected header 'sample_id,label'", line=1)
    labels = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise SchemaError(f"{path}: expected 2 fields", line=lineno)
        if parts[1] not in ("0", "1"):
            raise SchemaError(f"{path}: label must be 0 or 1, got {parts[1]!r}",
                              line=lineno)
        labels.append(int(parts[1]))
    if not labels:
        raise SchemaError(f"{path}: no data rows", line=2)
    return np.array(labels, dtype=np.int64)


def cmd_sample(args) -> int:
    labels = _read_labels_csv(args.labels)
    cfg = sampler.SamplerConfig(batch_size=args.batch_size,
                                pos_fraction=args.pos_frac, labels=labels,
                                seed=args.seed if args.seed is not None else 0)
    for batch in sampler.batches(cfg, args.n):
        sys.stdout.write(",".join(map(str, batch)) + "\n")
    return 0


def cmd_bench(args) -> int:
    shape = _parse_shape(args.shape, 4)
    dtype = np.uint8 if args.dtype == "uint8" else np.float32
    v = bench_mod.random_volume(shape, dtype,
                                seed=args.seed if args.seed is not None else 0)
    target = _parse_shape(args.target, 3)
    maker = (pipeline.preset_heavy_augs if args.preset == "heavy"
             else pipeline.preset_mirror3)
    pipe = maker(target)
    if args.seed is not None:
        pipe = pipeline.Pipeline(seed=args.seed, steps=pipe.steps)
    result = bench_mod.bench_pipeline(pipe, v, n_runs=args.runs)
    _emit(result.to_dict())
    return 0


# --- parser --------------------------------------------------------------------

def _add_common(sp) -> None:
    sp.add_argument("--seed", type=int, default=None,
                    help="64-bit seed; overrides any seed in a pipeline file")
    sp.add_argument("--threads", type=int,
                    default=int(os.environ.get("VOXFLOW_THREADS", "0")) or os.cpu_count(),
                    help="max worker threads for batch processing "
                         "(default: VOXFLOW_THREADS or CPU count)")
    sp.add_argument("--quiet", action="store_true",
                    help="suppress progress diagnostics on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxflow",
        description="Volumetric augmentation, weight inflation, and "
                    "evaluation toolkit.",
        epilog="Exit codes: 0 ok, 2 I/O, 3 schema, 4 shape, 5 infeasible.")
    parser.add_argument("--version", action="version",
                        version=f"voxflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("augment", help="apply an augmentation pipeline")
    p.add_argument("--pipeline", help="pipeline JSON file")
    p.add_argument("--preset", choices=("heavy", "mirror3"), default="heavy",
                   help="built-in protocol (ignored when --pipeline is given)")
    p.add_argument("--target", default="96,128,128",
                   help="preset resize target F,H,W (default 96,128,128)")
    p.add_argument("--in", dest="in_path", required=True,
                   help="VOX1 file, PNG-stack directory, or directory of "
                        ".vox files (batch mode)")
    p.add_argument("--out", required=True, help="output VOX1 file or directory")
    p.add_argument("--index", type=int, default=0,
                   help="sample index for seeding (single-file mode)")
    _add_common(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("inflate", help="inflate 2-D kernels in a TMAP to 3-D")
    p.add_argument("--in", dest="in_path", required=True, help="input TMAP")
    p.add_argument("--out", required=True, help="output TMAP")
    p.add_argument("--rules", help="JSON list of {pattern, depth, mode} rules")
    p.add_argument("--mode", choices=("center", "average"), default="center",
                   help="inflation mode when --rules is not given")
    p.add_argument("--depth", type=int, help="kernel depth when --rules is "
                                             "not given")
    _add_common(p)
    p.set_defaults(func=cmd_inflate)

    p = sub.add_parser("eval", help="confusion/MCC/AUC metrics for predictions")
    p.add_argument("--pred", required=True, help="predictions CSV")
    p.add_argument("--folds", action="store_true",
                   help="pool cross-validation folds (fold column required)")
    p.add_argument("--threshold", type=float, default=0.5)
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("calibrate",
                       help="half-split isotonic calibration with reliability "
                            "report")
    p.add_argument("--pred", required=True, help="predictions CSV")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--out-pred", required=True,
                   help="calibrated predictions CSV (held-out half)")
    p.add_argument("--out-reliability", required=True,
                   help="reliability bins CSV; a PNG figure is written "
                        "alongside")
    _add_common(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("uncertainty",
                       help="aggregate repeated stochastic predictions")
    p.add_argument("--probmat", required=True, help="probability-matrix CSV")
    p.add_argument("--spread", choices=("std", "range"), default="std")
    p.add_argument("--out", required=True,
                   help="per-sample stats CSV; a PNG figure is written "
                        "alongside")
    _add_common(p)
    p.set_defaults(func=cmd_uncertainty)

    p = sub.add_parser("roi", help="crop the annotated region of interest")
    p.add_argument("--frames", required=True,
                   help="PNG-stack directory or VOX1 file")
    p.add_argument("--out", required=True, help="cropped VOX1 output")
    p.add_argument("--pad", type=int, default=8)
    p.add_argument("--hue-lo", type=float, default=10.0)
    p.add_argument("--hue-hi", type=float, default=45.0)
    p.add_argument("--s-min", type=float, default=0.45)
    p.add_argument("--v-min", type=float, default=0.30)
    _add_common(p)
    p.set_defaults(func=cmd_roi)

    p = sub.add_parser("roi-stats", help="ROI size distribution report")
    p.add_argument("--cuboids", required=True, help="JSON list of cuboids")
    p.add_argument("--out", required=True,
                   help="per-axis stats CSV; a PNG figure is written alongside")
    p.add_argument("--bin-width", type=int, default=8)
    _add_common(p)
    p.set_defaults(func=cmd_roi_stats)

    p = sub.add_parser("heatmap", help="compile and overlay attention heatmaps")
    p.add_argument("--features", required=True, help="feature VOX1 (float32)")
    p.add_argument("--input", required=True, help="input VOX1 to overlay onto")
    p.add_argument("--out", required=True,
                   help="overlay output: .vox file or PNG-stack directory")
    p.add_argument("--out-heatmap", help="also write the low-res heatmap VOX1")
    p.add_argument("--factor", type=int, default=32)
    p.add_argument("--alpha", type=float, default=0.5)
    _add_common(p)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("sample", help="emit class-balanced batch indices")
    p.add_argument("--labels", required=True, help="sample_id,label CSV")
    p.add_argument("--batch-size", type=int, required=True)
    p.add_argument("--pos-frac", type=float, required=True)
    p.add_argument("--n", type=int, required=True, help="number of batches")
    _add_common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("bench", help="time a preset pipeline on a random volume")
    p.add_argument("--preset", choices=("heavy", "mirror3"), default="heavy")
    p.add_argument("--shape", default="96,128,128,3", help="volume F,H,W,C")
    p.add_argument("--dtype", choices=("uint8", "float32"), default="uint8")
    p.add_argument("--target", default="96,128,128", help="resize target F,H,W")
    p.add_argument("--runs", type=int, default=10)
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except IOFormatError as e:
        print(f"voxflow: error: {e}", file=sys.stderr)
        return 2
    except SchemaError as e:
        print(f"voxflow: error: {e}", file=sys.stderr)
        return 3
    except ShapeError as e:
        print(f"voxflow: error: {e}", file=sys.stderr)
        return 4
    except InfeasibleError as e:
        print(f"voxflow: error: {e}", file=sys.stderr)
        return 5
    except VoxflowError as e:
        print(f"voxflow: error: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"voxflow: error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"voxflow: error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
