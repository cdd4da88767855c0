"""Diversity-weighted choice of which K = floor(gamma*N) tokens survive.

Three interchangeable modes operate on the same diversity scores:

``pivotal`` (default)
    Ordered pivotal sampling over ascending token index.  Fixed sample size,
    marginal inclusion probabilities matching the plan exactly, and negative
    dependence between inclusions, which keeps the selected set stable when
    many tokens share similar scores.
``multinomial``
    K sequential draws without replacement, each proportional to the scores
    of the still-unselected tokens.
``topk``
    Deterministic: the K largest scores, ties to the lower index.

"Probability proportional to score" cannot hold verbatim once
``K * S_i / sum(S)`` exceeds 1, so the plan applies iterative proportional
capping: over-unit entries are clamped to 1 and the residual budget is
redistributed proportionally over the uncapped remainder until fixpoint.  The
capped probabilities still sum to exactly K.

Randomized modes draw from a counter-based Philox stream seeded from the
plan, so every selection is reproducible from (scores, gamma, mode, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diversity import DiversityProfile
from .tensor import SELECTION_MODES

GENERATOR_ID = "philox4x64-numpy"

_PROB_EPS = 1e-12


@dataclass(frozen=True)
class SelectionPlan:
    """Budget K, per-token inclusion probabilities, and sampling parameters."""

    budget: int
    inclusion_prob: np.ndarray
    mode: str
    seed: int
    capping_iterations: int = 0
    generator_id: str = GENERATOR_ID

    @property
    def n_tokens(self) -> int:
        return self.inclusion_prob.shape[0]


@dataclass(frozen=True)
class Selection:
    """Retained/discarded token index split; both sides sorted ascending."""

    retained: np.ndarray
    discarded: np.ndarray

    @property
    def n_tokens(self) -> int:
        return self.retained.shape[0] + self.discarded.shape[0]


def capped_inclusion_probabilities(
    scores: np.ndarray, budget: int
) -> tuple[np.ndarray, int]:
    """Inclusion probabilities proportional to scores, capped at 1, summing to K.

    Returns the probabilities and the number of capping rounds that ran.
    """
    s = np.asarray(scores, dtype=np.float64)
    if np.any(s < 0.0) or not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite and non-negative")
    total = s.sum()
    if total <= 0.0:
        raise ValueError("all scores are zero; selection weights undefined")
    n = s.shape[0]
    if not 1 <= budget <= n:
        raise ValueError(f"budget {budget} out of range for {n} tokens")
    if budget == n:
        return np.ones(n), 0

    pi = np.zeros(n)
    capped = np.zeros(n, dtype=bool)
    rounds = 0
    remaining = budget
    while True:
        free = ~capped
        pi[free] = remaining * s[free] / s[free].sum()
        over = free & (pi > 1.0)
        if not over.any():
            break
        pi[over] = 1.0
        capped |= over
        remaining = budget - int(capped.sum())
        rounds += 1
        if remaining == 0:
            pi[~capped] = 0.0
            break
        if remaining < 0:
            raise ValueError(f"budget {budget} cannot be met by {n} tokens")
    return pi, rounds


def build_plan(
    profile: DiversityProfile, gamma: float, mode: str, seed: int
) -> SelectionPlan:
    """Turn diversity scores into a concrete sampling plan.

    The budget is ``K = floor(gamma * N)`` and must be at least 1.
    """
    if mode not in SELECTION_MODES:
        raise ValueError(f"unknown selection mode {mode!r}")
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    n = profile.n_tokens
    budget = int(np.floor(gamma * n))
    if budget < 1:
        raise ValueError(f"budget floor({gamma}*{n}) is zero")
    pi, rounds = capped_inclusion_probabilities(profile.score, budget)
    return SelectionPlan(
        budget=budget,
        inclusion_prob=pi,
        mode=mode,
        seed=int(seed),
        capping_iterations=rounds,
    )


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def _pivotal(pi: np.ndarray, budget: int, seed: int) -> np.ndarray:
    """Ordered pivotal sampling: one left-to-right pass of probability duels.

    A carried unit with mass p duels the next unit with mass q.  If p+q < 1
    one unit absorbs the combined mass and the other is rejected; if p+q >= 1
    one unit is definitively selected and the loser carries p+q-1.  Each duel
    preserves expectations, so marginal inclusion probabilities equal pi, and
    mass conservation makes the sample size exactly K whenever sum(pi) = K.
    """
    rng = _rng(seed)
    selected = np.zeros(pi.shape[0], dtype=bool)

    selected[pi >= 1.0 - _PROB_EPS] = True
    live = np.flatnonzero((pi > _PROB_EPS) & (pi < 1.0 - _PROB_EPS))

    carry_idx = -1
    carry_p = 0.0
    for i in live:
        q = float(pi[i])
        if carry_idx < 0:
            carry_idx, carry_p = i, q
            continue
        s = carry_p + q
        u = rng.random()
        if s < 1.0:
            if u * s >= carry_p:
                carry_idx = i
            carry_p = s
        else:
            if u * (2.0 - s) < 1.0 - q:
                selected[carry_idx] = True
                carry_idx = i
            else:
                selected[i] = True
            carry_p = s - 1.0
            if carry_p <= _PROB_EPS:
                carry_idx = -1
                carry_p = 0.0
    if carry_idx >= 0 and carry_p >= 0.5:
        selected[carry_idx] = True

    chosen = np.flatnonzero(selected)
    if chosen.shape[0] != budget:
        raise AssertionError(
            f"pivotal pass selected {chosen.shape[0]} tokens, budget is {budget}; "
            "inclusion probabilities do not sum to an integer"
        )
    return chosen


def _multinomial(scores: np.ndarray, budget: int, seed: int) -> np.ndarray:
    """K score-proportional draws without replacement (renormalized each draw)."""
    rng = _rng(seed)
    w = np.asarray(scores, dtype=np.float64).copy()
    picked = np.empty(budget, dtype=np.int64)
    for k in range(budget):
        cum = np.cumsum(w)
        total = cum[-1]
        if total <= 0.0:
            raise ValueError("ran out of positive-score tokens before filling budget")
        idx = int(np.searchsorted(cum, rng.random() * total, side="right"))
        idx = min(idx, w.shape[0] - 1)
        picked[k] = idx
        w[idx] = 0.0
    picked.sort()
    return picked


def _topk(scores: np.ndarray, budget: int) -> np.ndarray:
    order = np.lexsort((np.arange(scores.shape[0]), -np.asarray(scores, dtype=np.float64)))
    picked = order[:budget]
    picked.sort()
    return picked


def select(plan: SelectionPlan, scores: np.ndarray | None = None) -> Selection:
    """Execute the plan and return exactly K retained token indices.

    ``scores`` are required for the multinomial and topk modes (they sample
    and rank raw scores); the pivotal mode consumes only the plan's
    inclusion probabilities.  Deterministic given (plan, scores).
    """
    if plan.mode == "pivotal":
        retained = _pivotal(plan.inclusion_prob, plan.budget, plan.seed)
    elif plan.mode == "multinomial":
        if scores is None:
            raise ValueError("multinomial selection needs the diversity scores")
        retained = _multinomial(scores, plan.budget, plan.seed)
    elif plan.mode == "topk":
        if scores is None:
            raise ValueError("topk selection needs the diversity scores")
        retained = _topk(scores, plan.budget)
    else:
        raise ValueError(f"unknown selection mode {plan.mode!r}")

    mask = np.zeros(plan.n_tokens, dtype=bool)
    mask[retained] = True
    return Selection(retained=retained, discarded=np.flatnonzero(~mask))
