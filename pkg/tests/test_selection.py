"""Selection plan capping and sampling-mode behavior."""

import numpy as np
import pytest

from kitoke.diversity import DiversityProfile
from kitoke.selection import (
    Selection,
    build_plan,
    capped_inclusion_probabilities,
    select,
)


def profile_from_scores(scores):
    s = np.asarray(scores, dtype=np.float64)
    return DiversityProfile(density=1.0 / s, score=s, alpha=800.0)


class TestCapping:
    def test_uniform_scores(self):
        pi, rounds = capped_inclusion_probabilities(np.ones(10), 5)
        np.testing.assert_allclose(pi, 0.5)
        assert rounds == 0

    def test_proportional_no_capping(self):
        pi, _ = capped_inclusion_probabilities(np.array([0.9, 0.05, 0.05]), 1)
        np.testing.assert_allclose(pi, [0.9, 0.05, 0.05])

    def test_one_round_of_capping(self):
        pi, rounds = capped_inclusion_probabilities(np.array([10.0, 1, 1, 1, 1]), 3)
        np.testing.assert_allclose(pi, [1.0, 0.5, 0.5, 0.5, 0.5])
        assert rounds == 1
        assert pi.sum() == pytest.approx(3.0, abs=1e-9)

    def test_cascading_caps(self):
        pi, rounds = capped_inclusion_probabilities(np.array([100.0, 10.0, 1, 1]), 3)
        # round 1 caps the first, round 2 caps the second
        np.testing.assert_allclose(pi, [1.0, 1.0, 0.5, 0.5])
        assert rounds == 2

    def test_sum_equals_budget_random(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            n = int(rng.integers(1, 60))
            k = int(rng.integers(1, n + 1))
            scores = rng.uniform(1e-6, 10.0, size=n) ** 3
            pi, _ = capped_inclusion_probabilities(scores, k)
            assert abs(pi.sum() - k) <= 1e-9
            assert (pi >= 0.0).all() and (pi <= 1.0).all()

    def test_full_budget_is_all_ones(self):
        pi, _ = capped_inclusion_probabilities(np.array([5.0, 1.0, 0.1]), 3)
        np.testing.assert_array_equal(pi, 1.0)

    def test_rejects_zero_scores(self):
        with pytest.raises(ValueError, match="zero"):
            capped_inclusion_probabilities(np.zeros(4), 2)

    def test_rejects_bad_budget(self):
        with pytest.raises(ValueError, match="budget"):
            capped_inclusion_probabilities(np.ones(4), 0)
        with pytest.raises(ValueError, match="budget"):
            capped_inclusion_probabilities(np.ones(4), 5)


class TestBuildPlan:
    def test_budget_floor(self):
        prof = profile_from_scores(np.ones(10))
        plan = build_plan(prof, gamma=0.57, mode="pivotal", seed=1)
        assert plan.budget == 5

    def test_records_generator_and_rounds(self):
        prof = profile_from_scores([10.0, 1, 1, 1, 1])
        plan = build_plan(prof, gamma=0.6, mode="pivotal", seed=1)
        assert plan.capping_iterations == 1
        assert plan.generator_id == "philox4x64-numpy"

    def test_rejects_empty_budget(self):
        prof = profile_from_scores(np.ones(5))
        with pytest.raises(ValueError, match="zero"):
            build_plan(prof, gamma=0.1, mode="pivotal", seed=0)

    def test_rejects_unknown_mode(self):
        prof = profile_from_scores(np.ones(5))
        with pytest.raises(ValueError, match="mode"):
            build_plan(prof, gamma=0.5, mode="sorted", seed=0)


def run_selection(scores, gamma, mode, seed):
    prof = profile_from_scores(scores)
    plan = build_plan(prof, gamma, mode, seed)
    return select(plan, prof.score), plan


class TestExactSize:
    @pytest.mark.parametrize("mode", ["pivotal", "multinomial", "topk"])
    def test_every_mode_every_seed(self, mode):
        rng = np.random.default_rng(10)
        for seed in range(40):
            n = int(rng.integers(2, 80))
            scores = rng.uniform(0.01, 1.0, size=n)
            gamma = float(rng.uniform(0.05, 1.0))
            k = int(np.floor(gamma * n))
            if k < 1:
                continue
            sel, _ = run_selection(scores, gamma, mode, seed)
            assert sel.retained.shape[0] == k
            assert np.all(np.diff(sel.retained) > 0)
            assert np.all(np.diff(sel.discarded) > 0)
            merged = np.concatenate([sel.retained, sel.discarded])
            np.testing.assert_array_equal(np.sort(merged), np.arange(n))

    @pytest.mark.parametrize("mode", ["pivotal", "multinomial", "topk"])
    def test_full_budget_returns_everything(self, mode):
        sel, _ = run_selection(np.array([0.5, 0.1, 0.9, 0.2]), 1.0, mode, seed=3)
        np.testing.assert_array_equal(sel.retained, np.arange(4))
        assert sel.discarded.shape[0] == 0


class TestTopK:
    def test_largest_scores_win(self):
        sel, _ = run_selection(np.array([0.1, 0.9, 0.9]), 2 / 3, "topk", seed=0)
        np.testing.assert_array_equal(sel.retained, [1, 2])

    def test_tie_breaks_to_lower_index(self):
        sel, _ = run_selection(np.array([0.1, 0.9, 0.9]), 1 / 3, "topk", seed=0)
        np.testing.assert_array_equal(sel.retained, [1])

    def test_permutation_invariance_up_to_ties(self):
        rng = np.random.default_rng(8)
        scores = rng.uniform(0.0, 1.0, size=30)  # distinct w.p. 1
        sel, _ = run_selection(scores, 0.3, "topk", seed=0)
        perm = rng.permutation(30)
        sel_p, _ = run_selection(scores[perm], 0.3, "topk", seed=0)
        np.testing.assert_array_equal(np.sort(perm[sel_p.retained]), sel.retained)


class TestDeterminismAndInvariance:
    @pytest.mark.parametrize("mode", ["pivotal", "multinomial", "topk"])
    def test_same_seed_same_selection(self, mode):
        scores = np.random.default_rng(4).uniform(0.01, 1.0, size=50)
        a, _ = run_selection(scores, 0.2, mode, seed=99)
        b, _ = run_selection(scores, 0.2, mode, seed=99)
        np.testing.assert_array_equal(a.retained, b.retained)

    def test_different_seeds_differ_somewhere(self):
        scores = np.random.default_rng(4).uniform(0.01, 1.0, size=200)
        picks = {
            tuple(run_selection(scores, 0.1, "pivotal", seed=s)[0].retained)
            for s in range(10)
        }
        assert len(picks) > 1

    @pytest.mark.parametrize("mode", ["pivotal", "multinomial", "topk"])
    @pytest.mark.parametrize("factor", [0.25, 3.0, 1e6])
    def test_scale_invariance(self, mode, factor):
        scores = np.random.default_rng(12).uniform(0.01, 1.0, size=60)
        base, _ = run_selection(scores, 0.25, mode, seed=7)
        scaled, _ = run_selection(scores * factor, 0.25, mode, seed=7)
        np.testing.assert_array_equal(base.retained, scaled.retained)

    def test_capped_plan_always_includes_capped_tokens(self):
        scores = np.array([50.0] + [1.0] * 9)
        for seed in range(25):
            sel, plan = run_selection(scores, 0.3, "pivotal", seed)
            assert plan.inclusion_prob[0] == 1.0
            assert 0 in sel.retained


class TestPivotalMarginals:
    def test_inclusion_frequencies_match_plan(self):
        # smaller companion to the acceptance-scale Monte-Carlo run
        rng = np.random.default_rng(20)
        scores = rng.uniform(0.05, 1.0, size=20)
        prof = profile_from_scores(scores)
        plan = build_plan(prof, gamma=0.25, mode="pivotal", seed=0)
        runs = 4000
        counts = np.zeros(20)
        for seed in range(runs):
            plan_s = build_plan(prof, gamma=0.25, mode="pivotal", seed=seed)
            counts[select(plan_s).retained] += 1
        freq = counts / runs
        sigma = np.sqrt(plan.inclusion_prob * (1 - plan.inclusion_prob) / runs)
        assert np.all(np.abs(freq - plan.inclusion_prob) <= 3.5 * sigma + 1e-12)


class TestMultinomial:
    def test_draws_are_distinct(self):
        scores = np.random.default_rng(2).uniform(0.01, 1.0, size=40)
        sel, _ = run_selection(scores, 0.5, "multinomial", seed=5)
        assert len(set(sel.retained.tolist())) == sel.retained.shape[0]

    def test_high_score_token_usually_drawn(self):
        scores = np.array([1000.0] + [0.001] * 29)
        hits = sum(
            0 in run_selection(scores, 0.1, "multinomial", seed=s)[0].retained
            for s in range(100)
        )
        assert hits == 100  # overwhelming weight, K=3 of 30

    def test_requires_scores(self):
        prof = profile_from_scores(np.ones(6))
        plan = build_plan(prof, 0.5, "multinomial", seed=0)
        with pytest.raises(ValueError, match="scores"):
            select(plan)
