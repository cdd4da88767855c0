"""Synthetic scene generators and brute-force reference computations.

The generators emit videos with a known temporal structure: each scene is a
set of token cluster centers, sampled with isotropic Gaussian noise and an
optional per-frame linear drift, so planted scene starts are ground truth for
boundary detection.  The reference computations re-derive densities,
differences, and merge assignments the slow, obvious way — direct loops over
tokens, no tiling, no norm caching — and deliberately share no code with the
optimized modules they are used to check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import TokenTensor


@dataclass(frozen=True)
class SceneSpec:
    """One scene: noisy samples around fixed centers, optionally drifting."""

    n_frames: int
    centers: np.ndarray
    noise_sigma: float = 0.0
    drift: np.ndarray | None = None

    def __post_init__(self):
        if self.n_frames < 1:
            raise ValueError("a scene needs at least one frame")
        if self.noise_sigma < 0.0:
            raise ValueError("noise sigma must be >= 0")
        if np.asarray(self.centers).ndim != 2:
            raise ValueError("centers must be an (M, D) array")


@dataclass(frozen=True)
class SceneScript:
    """Full video recipe: a scene sequence plus the generator seed."""

    scenes: tuple[SceneSpec, ...]
    seed: int = 0

    def __post_init__(self):
        if not self.scenes:
            raise ValueError("script needs at least one scene")
        shapes = {np.asarray(s.centers).shape for s in self.scenes}
        if len(shapes) != 1:
            raise ValueError(f"scenes disagree on (M, D): {shapes}")


def generate_scenes(script: SceneScript) -> tuple[TokenTensor, list[int]]:
    """Render a script to a token tensor plus ground-truth scene starts.

    Frame f of a scene holds ``centers + f * drift + noise``.  The returned
    boundary list contains the 0-based first frame of every scene (so it
    always starts with 0), matching the boundary convention of interval
    detection.  Deterministic per seed.
    """
    rng = np.random.default_rng(script.seed)
    m, d = np.asarray(script.scenes[0].centers).shape
    frames = []
    truth = []
    t = 0
    for scene in script.scenes:
        truth.append(t)
        centers = np.asarray(scene.centers, dtype=np.float64)
        drift = (
            np.zeros(d) if scene.drift is None else np.asarray(scene.drift, dtype=np.float64)
        )
        for f in range(scene.n_frames):
            noise = scene.noise_sigma * rng.standard_normal((m, d))
            frames.append(centers + f * drift + noise)
            t += 1
    data = np.stack(frames).astype(np.float32)
    return TokenTensor(data), truth


def random_scene_script(
    n_scenes: int,
    frames_per_scene: int,
    m_tokens: int,
    dims: int,
    center_scale: float = 1.0,
    noise_sigma: float = 0.05,
    drift_scale: float = 0.0,
    seed: int = 0,
) -> SceneScript:
    """Script with unit-calibrated scene jumps.

    Scene centers are drawn so consecutive scenes sit ``center_scale`` apart
    per token (the center difference is rescaled to that exact norm), which
    pins the planted jump size relative to the noise floor.
    """
    rng = np.random.default_rng(seed)
    scenes = []
    centers = rng.standard_normal((m_tokens, dims))
    for s in range(n_scenes):
        if s > 0:
            step = rng.standard_normal((m_tokens, dims))
            step *= center_scale / np.linalg.norm(step, axis=1, keepdims=True)
            centers = centers + step
        drift = None
        if drift_scale > 0.0:
            direction = rng.standard_normal(dims)
            drift = drift_scale * direction / np.linalg.norm(direction)
        scenes.append(
            SceneSpec(
                n_frames=frames_per_scene,
                centers=centers.copy(),
                noise_sigma=noise_sigma,
                drift=drift,
            )
        )
    return SceneScript(scenes=tuple(scenes), seed=int(rng.integers(2**63)))


def oracle_density(tensor: TokenTensor, alpha: float) -> np.ndarray:
    """Kernel density by direct summation: one token at a time, plain diffs."""
    x = tensor.matrix.astype(np.float64)
    n = x.shape[0]
    out = np.empty(n)
    for i in range(n):
        d2 = ((x - x[i]) ** 2).sum(axis=1)
        out[i] = np.exp(-d2 / alpha).sum()
    return out


def oracle_diff(tensor: TokenTensor) -> tuple[np.ndarray, np.ndarray]:
    """Positional and best-match mean distances, one frame pair at a time."""
    t_frames, m, _ = tensor.data.shape
    pos = np.empty(t_frames - 1)
    match = np.empty(t_frames - 1)
    for t in range(1, t_frames):
        prev = tensor.data[t - 1].astype(np.float64)
        cur = tensor.data[t].astype(np.float64)
        pos_sum = 0.0
        match_sum = 0.0
        for i in range(m):
            pos_sum += np.sqrt(((cur[i] - prev[i]) ** 2).sum())
            match_sum += np.sqrt(((cur - prev[i]) ** 2).sum(axis=1)).min()
        pos[t - 1] = pos_sum / m
        match[t - 1] = match_sum / m
    return pos, match


def oracle_assign(
    tensor: TokenTensor,
    retained: np.ndarray,
    discarded: np.ndarray,
    intervals: list[tuple[int, int]],
) -> np.ndarray:
    """Merge assignment by exhaustive cosine comparison per discarded token."""
    x = tensor.matrix.astype(np.float64)
    m = tensor.tokens_per_frame

    def cosine(a, b):
        na = np.sqrt((a * a).sum())
        nb = np.sqrt((b * b).sum())
        if na == 0.0 or nb == 0.0:
            return 0.0
        return float((a * b).sum() / (na * nb))

    out = np.empty(discarded.shape[0], dtype=np.int64)
    for j, u in enumerate(discarded):
        start, end = next(
            (s, e) for s, e in intervals if s * m <= u < (e + 1) * m
        )
        pool = [r for r in retained if start * m <= r < (end + 1) * m]
        if not pool:
            pool = list(retained)
        best_r, best_sim = pool[0], -np.inf
        for r in pool:
            sim = cosine(x[u], x[r])
            if sim > best_sim:
                best_r, best_sim = r, sim
        out[j] = best_r
    return out


def gap_threshold(values: np.ndarray) -> float:
    """Midpoint of the widest gap in a sorted value pool.

    For bimodal pools (a noise cluster far below a jump cluster) this lands
    between the clusters, giving a clean data-driven decision threshold for
    planted-boundary experiments.
    """
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.shape[0] < 2:
        raise ValueError("need at least two values to find a gap")
    gaps = np.diff(v)
    k = int(np.argmax(gaps))
    return float(0.5 * (v[k] + v[k + 1]))
