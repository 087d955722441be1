"""voxflow: volumetric augmentation, weight inflation, and evaluation toolkit.

Core pieces: immutable 4-D volumes with deterministic seeded transforms
and probability-gated pipelines; 2-D-to-3-D convolution kernel inflation;
binary-classification metrics with cross-validation pooling; isotonic
probability calibration and uncertainty aggregation; ROI extraction from
annotated frame stacks; attention-heatmap compilation; class-balanced
batch sampling; and bit-exact file formats, all behind one CLI.
"""

from .errors import (AxisTooShort, BadMagic, DtypeUnknown, EmptySet,
                     EvenDepthCenter, IdMismatch, InfeasibleBatch,
                     InfeasibleError, IOFormatError, JsonMalformed,
                     KernelLargerThanInput, MixedDimensions,
                     NoContourFound, NonContiguousIndices, NotRGB,
                     OneClassOnly, OverlappingOffsets, RangeError,
                     RegionOutOfBounds, SchemaError, ShapeError,
                     ShapeIncompatible, ShapeMismatch, SplitInfeasible,
                     TruncatedFile, VoxflowError)
from .heatmap import (heatmap_from_features, reduce_channels, to_rgb,
                      upscale_overlay)
from .inflate import (InflationMode, Kernel2D, Kernel3D, conv2d_ref,
                      conv3d_ref, inflate, inflate_map)
from .metrics import (Confusion, Prediction, PredictionSet, confusion,
                      fold_mean, fpr, mcc, pooled_cv, roc_auc, tpr)
from .pipeline import (Pipeline, Step, apply, apply_traced, parse,
                       preset_heavy_augs, preset_mirror3, serialize)
from .reliability import (IsotonicModel, ProbMatrix, ReliabilityBin,
                          UncertaintyStats, binned_calibration_error,
                          calibrate_split, isotonic_apply, isotonic_fit,
                          mc_dropout_stats, reliability_bins)
from .rng import RandomStream, child_stream, mix64
from .roi import AxisStats, ColorRule, orange_mask, roi_cuboid, roi_stats
from .sampler import SamplerConfig, batches
from .volume import Axis, Cuboid, Volume, cast, crop, quantize_to

__version__ = "0.1.0"

__all__ = [
    "Axis", "AxisStats", "ColorRule", "Confusion", "Cuboid",
    "InflationMode", "IsotonicModel", "Kernel2D", "Kernel3D", "Pipeline",
    "Prediction", "PredictionSet", "ProbMatrix", "RandomStream",
    "ReliabilityBin", "SamplerConfig", "Step", "UncertaintyStats",
    "Volume",
    "apply", "apply_traced", "batches", "binned_calibration_error",
    "calibrate_split", "cast", "child_stream", "confusion", "conv2d_ref",
    "conv3d_ref", "crop", "fold_mean", "fpr", "inflate", "inflate_map",
    "heatmap_from_features", "isotonic_apply", "isotonic_fit",
    "mc_dropout_stats", "mcc", "mix64", "orange_mask", "parse",
    "pooled_cv", "preset_heavy_augs", "preset_mirror3", "quantize_to",
    "reduce_channels", "reliability_bins", "roc_auc", "roi_cuboid",
    "roi_stats", "serialize", "to_rgb", "tpr", "upscale_overlay",
    "AxisTooShort", "BadMagic", "DtypeUnknown", "EmptySet",
    "EvenDepthCenter", "IOFormatError", "IdMismatch", "InfeasibleBatch",
    "InfeasibleError", "JsonMalformed", "KernelLargerThanInput",
    "MixedDimensions", "NoContourFound", "NonContiguousIndices", "NotRGB",
    "OneClassOnly", "OverlappingOffsets", "RangeError", "RegionOutOfBounds",
    "SchemaError", "ShapeError", "ShapeIncompatible", "ShapeMismatch",
    "SplitInfeasible", "TruncatedFile", "VoxflowError",
    "__version__",
]
