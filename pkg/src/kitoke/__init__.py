"""Kernel-based interval-aware compression of video visual-token tensors.

The library takes a (frames x tokens x dims) float32 embedding stack and
keeps a floor(gamma * N) subset chosen by global diversity, then folds the
discarded tokens into the survivors within content-adaptive temporal
intervals.  A transformer FLOPs model prices the resulting token stream.
"""

from .costmodel import (
    CostModelSpec,
    available_presets,
    flops,
    flops_exact,
    load_preset,
    per_layer_flops,
    tflops,
)
from .diversity import (
    DiversityProfile,
    estimate_diversity,
    kernel,
    load_profile,
    median_pairwise_sq_distance,
    save_profile,
)
from .merging import (
    CompressionResult,
    MergePlan,
    apply_merge,
    apply_newline_rule,
    plan_merge,
    save_result,
)
from .pipeline import StageError, compress
from .segmentation import (
    DiffTrace,
    IntervalSet,
    calibrate_thresholds,
    detect_boundaries,
    deviations,
    frame_diff,
    segment,
    write_trace_csv,
)
from .selection import Selection, SelectionPlan, build_plan, capped_inclusion_probabilities, select
from .tensor import (
    FormatError,
    LayoutSpec,
    RetentionConfig,
    TokenTensor,
    load_sidecar,
    load_tensor,
    save_sidecar,
    save_tensor,
)

__version__ = "0.1.0"

__all__ = [
    "CompressionResult",
    "CostModelSpec",
    "DiffTrace",
    "DiversityProfile",
    "FormatError",
    "IntervalSet",
    "LayoutSpec",
    "MergePlan",
    "RetentionConfig",
    "Selection",
    "SelectionPlan",
    "StageError",
    "TokenTensor",
    "apply_merge",
    "apply_newline_rule",
    "available_presets",
    "build_plan",
    "calibrate_thresholds",
    "capped_inclusion_probabilities",
    "compress",
    "detect_boundaries",
    "deviations",
    "estimate_diversity",
    "flops",
    "flops_exact",
    "frame_diff",
    "kernel",
    "load_preset",
    "load_profile",
    "load_sidecar",
    "load_tensor",
    "median_pairwise_sq_distance",
    "per_layer_flops",
    "plan_merge",
    "save_profile",
    "save_result",
    "save_sidecar",
    "save_tensor",
    "segment",
    "select",
    "tflops",
    "write_trace_csv",
]
