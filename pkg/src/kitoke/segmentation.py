"""Content-adaptive temporal interval construction.

Two per-frame-pair signals quantify visual change between consecutive frames:
the mean token distance at corresponding grid positions (appearance change)
and the mean distance under best-match alignment (change that survives
spatial displacement, so pure motion scores low).  Their sum is the total
difference signal.

A large difference alone is not a boundary: sustained camera or object motion
produces large but *flat* difference traces.  Genuine transitions stick out
from their local temporal neighborhood, so each position also gets an
absolute deviation (difference vs. its neighbors) and a relative deviation
(the same, normalized by the neighbor).  A frame starts a new interval when
the total difference exceeds ``tau_diff``, or when both deviations exceed
their thresholds (``tau_dev`` and ``tau_rel``) simultaneously.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .tensor import RetentionConfig, TokenTensor
from .workers import map_ordered

REL_DENOM_EPS = 1e-9


@dataclass(frozen=True)
class DiffTrace:
    """Difference and deviation signals for frame pairs (t-1, t), t = 1..T-1.

    All arrays share length T-1; entry k describes the change from frame k to
    frame k+1 (0-based).  ``n_frames`` keeps T so a single-frame video has a
    valid, empty trace.
    """

    n_frames: int
    diff_pos: np.ndarray
    diff_match: np.ndarray
    diff_total: np.ndarray
    dev: np.ndarray
    dev_rel: np.ndarray


@dataclass(frozen=True)
class IntervalSet:
    """Disjoint, contiguous frame intervals covering 0..T-1.

    ``boundaries`` lists the frames that start an interval (frame 0 always
    does); ``intervals`` holds the derived inclusive [start, end] pairs.
    """

    n_frames: int
    boundaries: tuple[int, ...]

    def __post_init__(self):
        b = self.boundaries
        if not b or b[0] != 0 or list(b) != sorted(set(b)) or b[-1] >= self.n_frames:
            raise ValueError(f"invalid interval boundaries {b} for T={self.n_frames}")

    @property
    def intervals(self) -> list[tuple[int, int]]:
        starts = list(self.boundaries)
        ends = [s - 1 for s in starts[1:]] + [self.n_frames - 1]
        return list(zip(starts, ends))

    def __len__(self) -> int:
        return len(self.boundaries)

    def interval_of_frame(self, t: int) -> int:
        return int(np.searchsorted(np.asarray(self.boundaries), t, side="right") - 1)


def _pair_diff(prev: np.ndarray, cur: np.ndarray) -> tuple[float, float]:
    """(positional, best-match) mean token distance for one frame pair."""
    a = prev.astype(np.float64)
    b = cur.astype(np.float64)
    pos = float(np.linalg.norm(b - a, axis=1).mean())
    sq_a = np.einsum("ij,ij->i", a, a)
    sq_b = np.einsum("ij,ij->i", b, b)
    d2 = sq_a[:, None] + sq_b[None, :] - 2.0 * (a @ b.T)
    np.maximum(d2, 0.0, out=d2)
    match = float(np.sqrt(d2.min(axis=1)).mean())
    return pos, match


def frame_diff(tensor: TokenTensor, with_deviations: bool = True) -> DiffTrace:
    """Per-pair difference signals; requires at least two frames.

    The positional term averages ``||v[t,i] - v[t-1,i]||`` over the M token
    slots; the match term averages, over the tokens of frame t-1, the distance
    to the nearest token of frame t (exact search over all M candidates).
    The best match is never farther than the positional counterpart, so
    ``diff_match <= diff_pos`` holds pairwise.
    """
    t_frames = tensor.frames
    if t_frames < 2:
        raise ValueError("frame differences need at least 2 frames")
    pairs = [(tensor.data[t - 1], tensor.data[t]) for t in range(1, t_frames)]
    results = map_ordered(lambda p: _pair_diff(p[0], p[1]), pairs)
    pos = np.array([r[0] for r in results])
    match = np.array([r[1] for r in results])
    total = pos + match
    if with_deviations:
        dev, dev_rel = deviations(total)
    else:
        dev = np.zeros_like(total)
        dev_rel = np.zeros_like(total)
    return DiffTrace(
        n_frames=t_frames,
        diff_pos=pos,
        diff_match=match,
        diff_total=total,
        dev=dev,
        dev_rel=dev_rel,
    )


def deviations(diff_total: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Absolute and relative deviation of each difference from its neighbors.

    ``dev[k] = max(diff[k] - diff[k-1], diff[k] - diff[k+1])`` and the
    relative form divides each term by the corresponding neighbor.  At the
    ends of the trace the max runs over the single available neighbor; a
    length-1 trace has no neighbors at all and yields zeros.  Denominators
    smaller than 1e-9 are replaced by 1e-9 (static spans produce zero diffs).
    """
    diff = np.asarray(diff_total, dtype=np.float64)
    if diff.ndim != 1 or diff.shape[0] < 1:
        raise ValueError("need at least one difference value")
    n = diff.shape[0]
    if n == 1:
        return np.zeros(1), np.zeros(1)

    left = np.full(n, -np.inf)
    right = np.full(n, -np.inf)
    left[1:] = diff[1:] - diff[:-1]
    right[:-1] = diff[:-1] - diff[1:]
    dev = np.maximum(left, right)

    denom_l = np.maximum(np.abs(diff), REL_DENOM_EPS)
    rel_left = np.full(n, -np.inf)
    rel_right = np.full(n, -np.inf)
    rel_left[1:] = left[1:] / denom_l[:-1]
    rel_right[:-1] = right[:-1] / denom_l[1:]
    dev_rel = np.maximum(rel_left, rel_right)
    return dev, dev_rel


def detect_boundaries(trace: DiffTrace, cfg: RetentionConfig) -> IntervalSet:
    """Partition frames into intervals by thresholding the trace.

    Frame t >= 1 starts a new interval iff ``diff_total > tau_diff`` or both
    ``dev > tau_dev`` and ``dev_rel > tau_rel``.  Frame 0 always starts the
    first interval; a single-frame video is one interval.  Raising any
    threshold can only remove boundaries, never add them.
    """
    if trace.n_frames == 1:
        return IntervalSet(n_frames=1, boundaries=(0,))
    magnitude = trace.diff_total > cfg.tau_diff
    deviation = (trace.dev > cfg.tau_dev) & (trace.dev_rel > cfg.tau_rel)
    cut = magnitude | deviation
    boundaries = (0, *np.flatnonzero(cut) + 1)
    return IntervalSet(n_frames=trace.n_frames, boundaries=tuple(int(b) for b in boundaries))


def segment(tensor: TokenTensor, cfg: RetentionConfig) -> tuple[DiffTrace, IntervalSet]:
    """Convenience wrapper: trace plus interval set, handling T = 1."""
    if tensor.frames == 1:
        empty = np.zeros(0)
        trace = DiffTrace(1, empty, empty, empty, empty.copy(), empty.copy())
        return trace, IntervalSet(n_frames=1, boundaries=(0,))
    trace = frame_diff(tensor)
    return trace, detect_boundaries(trace, cfg)


def calibrate_thresholds(
    traces: list[DiffTrace], percentile: float = 80.0
) -> dict[str, float]:
    """Suggested thresholds: a percentile of the pooled signal distributions.

    Pools ``diff_total``, ``dev``, and ``dev_rel`` over a sample of videos
    and reports the requested percentile of each, a practical starting point
    when moving to a backbone with a different embedding scale.
    """
    if not traces:
        raise ValueError("need at least one trace to calibrate")
    if not 0.0 < percentile < 100.0:
        raise ValueError(f"percentile must be in (0, 100), got {percentile}")
    diff = np.concatenate([t.diff_total for t in traces])
    dev = np.concatenate([t.dev for t in traces])
    dev_rel = np.concatenate([t.dev_rel for t in traces])
    if diff.size == 0:
        raise ValueError("traces contain no frame pairs")
    return {
        "tau_diff": float(np.percentile(diff, percentile)),
        "tau_dev": float(np.percentile(dev, percentile)),
        "tau_rel": float(np.percentile(dev_rel, percentile)),
        "percentile": float(percentile),
        "n_pairs": int(diff.size),
    }


def write_trace_csv(
    trace: DiffTrace, path: str | os.PathLike, cfg: RetentionConfig | None = None
) -> None:
    """Dump the trace (and boundary flags when a config is given) as CSV."""
    if cfg is not None:
        cuts = set(detect_boundaries(trace, cfg).boundaries)
    else:
        cuts = set()
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["t", "diff_pos", "diff_match", "diff_total", "dev", "dev_rel", "is_boundary"]
        )
        for k in range(trace.diff_total.shape[0]):
            t = k + 1
            writer.writerow(
                [
                    t,
                    repr(float(trace.diff_pos[k])),
                    repr(float(trace.diff_match[k])),
                    repr(float(trace.diff_total[k])),
                    repr(float(trace.dev[k])),
                    repr(float(trace.dev_rel[k])),
                    int(t in cuts),
                ]
            )
