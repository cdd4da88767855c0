"""Interval-aware merging of discarded tokens into retained ones.

Rather than dropping unselected tokens outright, each one is folded into the
retained token it resembles most — but only within its own temporal interval,
so content from unrelated moments is never blended together.  Resemblance is
cosine similarity; the fold is a diversity-weighted average in which globally
distinctive tokens pull harder.

Retained tokens keep their original order: downstream positional encodings
depend on it.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from .diversity import DiversityProfile
from .segmentation import IntervalSet
from .selection import Selection
from .tensor import (
    VERSION_TENSOR,
    LayoutSpec,
    TokenTensor,
    _write_header,
)

NO_MERGE = -1


@dataclass(frozen=True)
class MergePlan:
    """For every discarded token, the retained token absorbing it.

    ``assignment[j]`` maps the j-th discarded token (in ``discarded`` order)
    to an *original* retained token index; ``groups[r]`` lists the discarded
    token indices absorbed by retained slot r (r indexes ``retained``).
    A full-budget run (gamma = 1) has an empty assignment.
    """

    retained: np.ndarray
    discarded: np.ndarray
    assignment: np.ndarray
    groups: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class CompressionResult:
    """Output of one compression run.

    ``retained_indices`` are the surviving original token indices, ascending;
    row r of ``merged_embeddings`` is the (possibly merged) embedding of
    ``retained_indices[r]``.  ``report`` carries run metadata and
    ``newline_mask`` flags surviving layout newline slots when a layout was
    supplied.
    """

    retained_indices: np.ndarray
    merged_embeddings: np.ndarray
    report: dict
    newline_mask: np.ndarray | None = None

    def content_digest(self) -> str:
        """SHA-256 over everything except timings; equal digests mean equal runs."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.retained_indices, dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.merged_embeddings, dtype=np.float32).tobytes())
        if self.newline_mask is not None:
            h.update(np.ascontiguousarray(self.newline_mask, dtype=np.uint8).tobytes())
        stable = {k: v for k, v in self.report.items() if k != "timings_ms"}
        h.update(json.dumps(stable, sort_keys=True).encode())
        return h.hexdigest()


def _unit_rows(x: np.ndarray) -> np.ndarray:
    """Rows scaled to unit norm; zero rows stay zero (cosine 0 to everything)."""
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    safe = np.where(norms > 0.0, norms, 1.0)
    return x / safe


def plan_merge(
    tensor: TokenTensor, sel: Selection, intervals: IntervalSet
) -> MergePlan:
    """Assign each discarded token to its most similar retained token.

    Candidates are the retained tokens of the discarded token's own interval;
    ties go to the lower retained index.  An interval that kept no token at
    all falls back to the most similar retained token of the whole video, so
    every discarded token is absorbed exactly once.
    """
    if sel.retained.shape[0] == 0:
        raise ValueError("selection retained no tokens; nothing to merge into")
    m = tensor.tokens_per_frame
    x = tensor.matrix.astype(np.float64)
    unit = _unit_rows(x)

    assignment = np.full(sel.discarded.shape[0], NO_MERGE, dtype=np.int64)
    pos_of_discarded = {int(u): j for j, u in enumerate(sel.discarded)}

    for start, end in intervals.intervals:
        lo, hi = start * m, (end + 1) * m
        r_in = sel.retained[(sel.retained >= lo) & (sel.retained < hi)]
        u_in = sel.discarded[(sel.discarded >= lo) & (sel.discarded < hi)]
        if u_in.shape[0] == 0:
            continue
        candidates = r_in if r_in.shape[0] > 0 else sel.retained
        sims = unit[u_in] @ unit[candidates].T
        best = candidates[np.argmax(sims, axis=1)]
        for u, r in zip(u_in, best):
            assignment[pos_of_discarded[int(u)]] = int(r)

    slot_of_retained = {int(r): k for k, r in enumerate(sel.retained)}
    members: list[list[int]] = [[] for _ in range(sel.retained.shape[0])]
    for j, u in enumerate(sel.discarded):
        members[slot_of_retained[int(assignment[j])]].append(int(u))
    return MergePlan(
        retained=sel.retained,
        discarded=sel.discarded,
        assignment=assignment,
        groups=tuple(tuple(g) for g in members),
    )


def apply_merge(
    tensor: TokenTensor,
    profile: DiversityProfile,
    plan: MergePlan,
    mode: str,
) -> np.ndarray:
    """Merged K x D float32 embeddings for the retained tokens.

    weighted
        Each retained token r becomes the average of itself and its absorbed
        tokens, weighted by the *global* diversity scores, accumulated in
        float64: ``(S_r x_r + sum S_u x_u) / (S_r + sum S_u)``.
    uniform
        Plain average over the same group.
    none
        Retained embeddings pass through unchanged; absorbed tokens are
        simply dropped.
    """
    if mode not in ("none", "uniform", "weighted"):
        raise ValueError(f"unknown merge mode {mode!r}")
    x = tensor.matrix
    k = plan.retained.shape[0]
    if mode == "none" or plan.discarded.shape[0] == 0:
        return x[plan.retained].astype(np.float32, copy=True)

    scores = profile.score
    if mode == "weighted":
        if np.any(scores <= 0.0):
            raise AssertionError("diversity scores must be strictly positive")
        # the average is invariant to a common weight rescale; dividing by the
        # max makes all-equal scores literally the uniform computation
        scores = scores / scores.max()
    w_own = scores[plan.retained] if mode == "weighted" else np.ones(k)
    acc = w_own[:, None] * x[plan.retained].astype(np.float64)
    wsum = w_own.copy()

    slot = np.searchsorted(plan.retained, plan.assignment)
    w_u = scores[plan.discarded] if mode == "weighted" else np.ones(plan.discarded.shape[0])
    np.add.at(acc, slot, w_u[:, None] * x[plan.discarded].astype(np.float64))
    np.add.at(wsum, slot, w_u)

    return (acc / wsum[:, None]).astype(np.float32)


def apply_newline_rule(
    layout: LayoutSpec, sel: Selection, frames: int
) -> np.ndarray:
    """Which per-row newline slots survive: those whose row kept >= 1 token.

    Returns a boolean array of length ``frames * rows_per_frame``, ordered
    frame-major then row.  The layout grid must tile the tensor exactly.
    """
    m = layout.tokens_per_frame
    if frames * m != sel.n_tokens:
        raise ValueError(
            f"layout grid {layout.rows_per_frame}x{layout.cols_per_row} over "
            f"{frames} frames covers {frames * m} tokens, selection has {sel.n_tokens}"
        )
    kept = np.zeros(sel.n_tokens, dtype=bool)
    kept[sel.retained] = True
    rows = kept.reshape(frames, layout.rows_per_frame, layout.cols_per_row)
    return rows.any(axis=2).reshape(-1)


def save_result(
    result: CompressionResult,
    embeddings_path: str | os.PathLike,
    report_path: str | os.PathLike | None = None,
) -> None:
    """Write merged embeddings as a 1 x K x D KTK1 file plus the JSON report."""
    k, d = result.merged_embeddings.shape
    with open(embeddings_path, "wb") as f:
        _write_header(f, VERSION_TENSOR, 1, k, d)
        f.write(np.ascontiguousarray(result.merged_embeddings, dtype=np.float32).tobytes())
    if report_path is not None:
        doc = dict(result.report)
        doc["retained_indices"] = [int(i) for i in result.retained_indices]
        if result.newline_mask is not None:
            doc["newline_mask"] = [bool(b) for b in result.newline_mask]
        with open(report_path, "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=2)
            f.write("\n")
