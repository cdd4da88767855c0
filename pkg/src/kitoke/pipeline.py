"""End-to-end compression: diversity -> selection -> segmentation -> merge.

Segmentation and selection share no state, so their relative order is
immaterial; this module fixes the order above for reproducible reports.  A
run is fully determined by (tensor, config): the only randomness flows from
the config seed through the documented generator.
"""

from __future__ import annotations

import time

import numpy as np

from .diversity import estimate_diversity
from .merging import (
    CompressionResult,
    apply_merge,
    apply_newline_rule,
    plan_merge,
)
from .segmentation import segment
from .selection import build_plan, select
from .tensor import LayoutSpec, RetentionConfig, TokenTensor


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage


def _run(stage: str, timings: dict, fn):
    t0 = time.perf_counter()
    try:
        out = fn()
    except StageError:
        raise
    except Exception as exc:
        raise StageError(stage, exc) from exc
    timings[stage] = round((time.perf_counter() - t0) * 1e3, 3)
    return out


def compress(
    tensor: TokenTensor,
    cfg: RetentionConfig,
    layout: LayoutSpec | None = None,
) -> CompressionResult:
    """Compress a token tensor down to floor(gamma * N) tokens.

    Parameters
    ----------
    tensor : TokenTensor
        The (T, M, D) float32 token stack.
    cfg : RetentionConfig
        Retention ratio, bandwidth, boundary thresholds, modes, seed.
    layout : LayoutSpec, optional
        Per-frame token grid; when given, the result carries a newline mask
        flagging which per-row newline slots keep at least one token.

    Returns
    -------
    CompressionResult
        Retained indices (ascending), merged K x D float32 embeddings, run
        report, and the optional newline mask.  Bit-identical across repeat
        runs and worker counts for a fixed seed.
    """
    n = tensor.n_tokens
    budget = cfg.budget(n)
    timings: dict[str, float] = {}

    profile = _run("diversity", timings, lambda: estimate_diversity(tensor, cfg.alpha))
    plan = _run(
        "selection_plan",
        timings,
        lambda: build_plan(profile, cfg.gamma, cfg.selection_mode, cfg.seed),
    )
    sel = _run("selection", timings, lambda: select(plan, profile.score))
    trace, intervals = _run("segmentation", timings, lambda: segment(tensor, cfg))
    merge_plan = _run("merge_plan", timings, lambda: plan_merge(tensor, sel, intervals))
    merged = _run(
        "merge", timings, lambda: apply_merge(tensor, profile, merge_plan, cfg.merge_mode)
    )
    newline_mask = None
    if layout is not None:
        newline_mask = _run(
            "newline_rule",
            timings,
            lambda: apply_newline_rule(layout, sel, tensor.frames),
        )

    kept = np.zeros(n, dtype=bool)
    kept[sel.retained] = True
    per_interval = []
    m = tensor.tokens_per_frame
    for start, end in intervals.intervals:
        lo, hi = start * m, (end + 1) * m
        r = int(kept[lo:hi].sum())
        per_interval.append(
            {
                "start_frame": start,
                "end_frame": end,
                "retained": r,
                "unselected": (hi - lo) - r,
            }
        )

    report = {
        "n_tokens_in": n,
        "n_tokens_out": budget,
        "gamma": cfg.gamma,
        "n_intervals": len(intervals),
        "intervals": [[s, e] for s, e in intervals.intervals],
        "per_interval": per_interval,
        "config": cfg.to_dict(),
        "seed": int(cfg.seed),
        "generator": plan.generator_id,
        "capping_iterations": plan.capping_iterations,
        "timings_ms": timings,
    }
    return CompressionResult(
        retained_indices=sel.retained,
        merged_embeddings=merged,
        report=report,
        newline_mask=newline_mask,
    )
