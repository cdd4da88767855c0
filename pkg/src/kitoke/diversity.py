"""Global kernel-density redundancy estimation.

Every token is compared against every other token of the video with a
Gaussian kernel ``exp(-||a - b||^2 / alpha)``.  Summing the kernel over all N
tokens (self included) gives a density ``D_i >= 1``: tokens sitting in crowded
regions of embedding space — static backgrounds, near-duplicate frames,
recurring patterns — accumulate high density.  The diversity score is the
inverse, ``S_i = 1 / D_i``, so distinctive tokens score high.  Densities are
exact over the full N x N pair space; there is no nearest-neighbor shortcut.

Inputs are float32; all accumulation runs in float64.  The pair space is
processed in fixed-size tiles over the symmetric upper triangle, and tile
partials are reduced in a canonical order, so the result is bit-identical
regardless of the ``KITOKE_THREADS`` worker count.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .tensor import (
    VERSION_TABLE,
    FormatError,
    TokenTensor,
    _read_header,
    _read_payload,
    _write_header,
)
from .workers import map_ordered

TILE = 1024


@dataclass(frozen=True)
class DiversityProfile:
    """Per-token density and diversity score over all N = T*M tokens."""

    density: np.ndarray
    score: np.ndarray
    alpha: float

    def __post_init__(self):
        if self.density.shape != self.score.shape or self.density.ndim != 1:
            raise ValueError("density and score must be 1-d arrays of equal length")

    @property
    def n_tokens(self) -> int:
        return self.density.shape[0]


def kernel(a: np.ndarray, b: np.ndarray, alpha: float) -> float:
    """Gaussian similarity ``exp(-||a - b||^2 / alpha)`` of two embeddings.

    Symmetric, in (0, 1], and exactly 1 iff ``a == b``.  ``alpha`` controls
    how fast similarity decays with squared distance and must be positive.
    """
    if alpha <= 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"vector shapes differ: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.exp(-(diff @ diff) / alpha))


def _tile_starts(n: int) -> list[int]:
    return list(range(0, n, TILE))


def _pair_kernel_sums(x, sq_norms, alpha, i0, j0):
    """Row and column kernel sums of one (i-tile, j-tile) block, j0 >= i0.

    Squared distances use ||a||^2 + ||b||^2 - 2 a.b with cached norms; tiny
    negative cancellation residue is clamped to zero so the kernel stays <= 1.
    """
    n = x.shape[0]
    i1, j1 = min(i0 + TILE, n), min(j0 + TILE, n)
    d2 = x[i0:i1] @ x[j0:j1].T
    d2 *= -2.0
    d2 += sq_norms[i0:i1, None]
    d2 += sq_norms[None, j0:j1]
    np.maximum(d2, 0.0, out=d2)
    d2 /= -alpha
    np.exp(d2, out=d2)
    row = d2.sum(axis=1)
    col = d2.sum(axis=0) if j0 > i0 else None
    return row, col


def estimate_diversity(tensor: TokenTensor, alpha: float) -> DiversityProfile:
    """Exact O(N^2) kernel density and diversity score for every token.

    Parameters
    ----------
    tensor : TokenTensor
        Validated token stack; densities are computed over all T*M tokens.
    alpha : float
        Positive Gaussian bandwidth, taken verbatim (no auto-scaling).

    Returns
    -------
    DiversityProfile
        ``density[i] = sum_j exp(-||x_i - x_j||^2 / alpha)`` including the
        self term (so every density is >= 1), and ``score = 1 / density``.
        Deterministic: no RNG, and independent of the worker count.
    """
    if alpha <= 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    x = tensor.matrix.astype(np.float64)
    sq_norms = np.einsum("ij,ij->i", x, x)
    n = x.shape[0]

    starts = _tile_starts(n)
    pairs = [(i0, j0) for i0 in starts for j0 in starts if j0 >= i0]
    parts = map_ordered(
        lambda p: _pair_kernel_sums(x, sq_norms, alpha, p[0], p[1]), pairs
    )

    # Canonical reduction: for tile t, column partials from (i, t) blocks in
    # ascending i, then row partials from (t, j) blocks in ascending j.
    by_pair = dict(zip(pairs, parts))
    density = np.zeros(n)
    for t0 in starts:
        t1 = min(t0 + TILE, n)
        acc = np.zeros(t1 - t0)
        for i0 in starts:
            if i0 < t0:
                acc += by_pair[(i0, t0)][1]
        for j0 in starts:
            if j0 >= t0:
                acc += by_pair[(t0, j0)][0]
        density[t0:t1] = acc

    return DiversityProfile(density=density, score=1.0 / density, alpha=float(alpha))


def median_pairwise_sq_distance(
    tensor: TokenTensor, max_tokens: int = 1000, seed: int = 0
) -> float:
    """Median pairwise squared distance on a token subsample.

    Diagnostic only: lets users sanity-check the bandwidth against the
    embedding scale of their backbone (similarities are informative when
    alpha is within a few orders of magnitude of this median).
    """
    x = tensor.matrix.astype(np.float64)
    n = x.shape[0]
    if n > max_tokens:
        idx = np.random.default_rng(seed).choice(n, size=max_tokens, replace=False)
        idx.sort()
        x = x[idx]
    sq = np.einsum("ij,ij->i", x, x)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    iu = np.triu_indices(x.shape[0], k=1)
    return float(np.median(d2[iu]))


def save_profile(profile: DiversityProfile, path: str | os.PathLike) -> None:
    """Dump density and score as a 2 x N float64 table (container version 2)."""
    with open(path, "wb") as f:
        _write_header(f, VERSION_TABLE, 1, 2, profile.n_tokens)
        f.write(np.ascontiguousarray(profile.density).tobytes())
        f.write(np.ascontiguousarray(profile.score).tobytes())


def load_profile(path: str | os.PathLike, alpha: float = float("nan")) -> DiversityProfile:
    """Read a profile dump written by :func:`save_profile`."""
    with open(path, "rb") as f:
        version, t, m, d = _read_header(f, path)
        if version != VERSION_TABLE or (t, m) != (1, 2):
            raise FormatError(f"{path}: not a 2 x N diversity table")
        flat = _read_payload(f, path, 2 * d, "<f8")
    return DiversityProfile(density=flat[:d].copy(), score=flat[d:].copy(), alpha=alpha)
