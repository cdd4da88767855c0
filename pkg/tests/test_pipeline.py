"""End-to-end compression pipeline behavior."""

import numpy as np
import pytest

import kitoke.pipeline
from kitoke.pipeline import StageError, compress
from kitoke.tensor import LayoutSpec, RetentionConfig, TokenTensor


def make_tensor(t, m, d, seed=0):
    rng = np.random.default_rng(seed)
    return TokenTensor(rng.standard_normal((t, m, d), dtype=np.float32))


class TestBudget:
    @pytest.mark.parametrize(
        "gamma,expected", [(0.25, 1568), (0.10, 627), (0.05, 313), (0.01, 62)]
    )
    def test_reference_scale_token_counts(self, gamma, expected):
        # 32 x 196 tokens; a small D keeps this a fast structural check (the
        # acceptance suite runs the full D = 896 version)
        t = make_tensor(32, 196, 8, seed=1)
        res = compress(t, RetentionConfig(gamma=gamma, seed=0))
        assert res.retained_indices.shape[0] == expected
        assert res.merged_embeddings.shape == (expected, 8)
        assert res.report["n_tokens_out"] == expected

    def test_identity_at_full_budget(self):
        t = make_tensor(4, 10, 6, seed=2)
        res = compress(t, RetentionConfig(gamma=1.0, seed=5))
        np.testing.assert_array_equal(res.retained_indices, np.arange(40))
        assert res.merged_embeddings.tobytes() == t.matrix.tobytes()

    def test_empty_budget_rejected(self):
        t = make_tensor(2, 3, 4)
        with pytest.raises(ValueError, match="budget"):
            compress(t, RetentionConfig(gamma=0.1))


class TestDeterminism:
    def test_repeat_runs_are_bit_identical(self):
        t = make_tensor(6, 20, 12, seed=3)
        cfg = RetentionConfig(gamma=0.2, seed=1234)
        digests = {compress(t, cfg).content_digest() for _ in range(5)}
        assert len(digests) == 1

    def test_worker_count_is_invisible(self, monkeypatch):
        t = make_tensor(8, 24, 10, seed=4)
        cfg = RetentionConfig(gamma=0.15, seed=7)
        digests = set()
        for threads in ("1", "2", "5"):
            monkeypatch.setenv("KITOKE_THREADS", threads)
            digests.add(compress(t, cfg).content_digest())
        assert len(digests) == 1

    def test_seed_changes_selection(self):
        t = make_tensor(6, 20, 12, seed=3)
        picks = {
            tuple(compress(t, RetentionConfig(gamma=0.2, seed=s)).retained_indices)
            for s in range(8)
        }
        assert len(picks) > 1


class TestStageIsolation:
    def test_merge_mode_changes_only_embeddings(self):
        t = make_tensor(6, 15, 8, seed=5)
        base = dict(gamma=0.3, seed=11)
        res_none = compress(t, RetentionConfig(merge_mode="none", **base))
        res_weighted = compress(t, RetentionConfig(merge_mode="weighted", **base))
        np.testing.assert_array_equal(
            res_none.retained_indices, res_weighted.retained_indices
        )
        assert res_none.report["intervals"] == res_weighted.report["intervals"]
        assert res_none.merged_embeddings.tobytes() != res_weighted.merged_embeddings.tobytes()

    def test_selection_mode_flows_through(self):
        t = make_tensor(4, 10, 6, seed=6)
        res = compress(t, RetentionConfig(gamma=0.5, selection_mode="topk"))
        assert res.report["config"]["selection_mode"] == "topk"


class TestReport:
    def test_counts_are_consistent(self):
        t = make_tensor(9, 14, 7, seed=7)
        res = compress(t, RetentionConfig(gamma=0.4, seed=2))
        rep = res.report
        assert rep["n_tokens_in"] == 126
        assert rep["n_tokens_out"] == res.retained_indices.shape[0]
        per = rep["per_interval"]
        assert len(per) == rep["n_intervals"] == len(rep["intervals"])
        assert sum(p["retained"] for p in per) == rep["n_tokens_out"]
        assert sum(p["retained"] + p["unselected"] for p in per) == 126
        frame_count = sum(p["end_frame"] - p["start_frame"] + 1 for p in per)
        assert frame_count == 9

    def test_report_carries_generator_and_timings(self):
        t = make_tensor(3, 8, 4, seed=8)
        res = compress(t, RetentionConfig(gamma=0.5, seed=3))
        assert res.report["generator"] == "philox4x64-numpy"
        assert {"diversity", "selection", "segmentation", "merge"} <= set(
            res.report["timings_ms"]
        )

    def test_single_frame_video(self):
        t = make_tensor(1, 12, 5, seed=9)
        res = compress(t, RetentionConfig(gamma=0.5, seed=1))
        assert res.report["n_intervals"] == 1
        assert res.report["intervals"] == [[0, 0]]
        assert res.retained_indices.shape[0] == 6


class TestLayoutWiring:
    def test_newline_mask_present_with_layout(self):
        t = make_tensor(3, 12, 4, seed=10)
        layout = LayoutSpec(rows_per_frame=3, cols_per_row=4)
        res = compress(t, RetentionConfig(gamma=0.5, seed=4), layout=layout)
        assert res.newline_mask is not None
        assert res.newline_mask.shape == (9,)  # 3 frames x 3 rows

    def test_no_layout_no_mask(self):
        t = make_tensor(2, 6, 4, seed=11)
        res = compress(t, RetentionConfig(gamma=0.5, seed=4))
        assert res.newline_mask is None

    def test_full_budget_keeps_every_newline(self):
        t = make_tensor(2, 6, 4, seed=12)
        layout = LayoutSpec(rows_per_frame=2, cols_per_row=3)
        res = compress(t, RetentionConfig(gamma=1.0), layout=layout)
        assert res.newline_mask.all()


class TestStageErrors:
    def test_failure_is_annotated_with_stage(self, monkeypatch):
        def boom(tensor, alpha):
            raise FloatingPointError("synthetic failure")

        monkeypatch.setattr(kitoke.pipeline, "estimate_diversity", boom)
        t = make_tensor(2, 6, 4, seed=13)
        with pytest.raises(StageError, match="diversity") as exc_info:
            compress(t, RetentionConfig(gamma=0.5))
        assert exc_info.value.stage == "diversity"
