"""Bit-exact parity between the in-process bindings and the CLI."""

import json
import subprocess
import sys
import warnings

import numpy as np
import pytest

from kitoke.tensor import TokenTensor, load_tensor, save_tensor
from kitoke_bindings import compress_arrays, flops


def run_cli(argv):
    return subprocess.run(
        [sys.executable, "-m", "kitoke.cli", *argv],
        capture_output=True,
        text=True,
        check=False,
    )


class TestCliParity:
    def test_twenty_random_triples_bit_exact(self, tmp_path):
        rng = np.random.default_rng(606)
        modes = ["pivotal", "multinomial", "topk"]
        merges = ["weighted", "uniform", "none"]
        for case in range(20):
            frames = int(rng.integers(2, 8))
            m = int(rng.integers(4, 20))
            d = int(rng.integers(2, 24))
            data = rng.standard_normal((frames, m, d), dtype=np.float32)
            gamma = float(rng.uniform(1.0 / (frames * m), 1.0))
            seed = int(rng.integers(0, 2**32))
            mode = modes[case % 3]
            merge = merges[(case // 3) % 3]

            src = tmp_path / f"in{case}.ktk1"
            out = tmp_path / f"out{case}.ktk1"
            report_path = tmp_path / f"rep{case}.json"
            save_tensor(TokenTensor(data), src)
            proc = run_cli(
                [
                    "compress", "--input", str(src), "--out", str(out),
                    "--report", str(report_path), "--gamma", repr(gamma),
                    "--seed", str(seed), "--mode", mode, "--merge", merge,
                ]
            )
            assert proc.returncode == 0, proc.stderr

            indices, embeddings, report = compress_arrays(
                data, {"gamma": gamma, "seed": seed,
                       "selection_mode": mode, "merge_mode": merge}
            )

            cli_embeddings = load_tensor(out)
            assert cli_embeddings.matrix.tobytes() == embeddings.tobytes()
            cli_report = json.loads(report_path.read_text())
            assert cli_report["retained_indices"] == indices.tolist()
            for key in ("n_tokens_out", "intervals", "config", "capping_iterations"):
                assert cli_report[key] == report[key], key

    def test_identity_budget(self):
        data = np.random.default_rng(1).standard_normal((3, 5, 4), dtype=np.float32)
        indices, embeddings, report = compress_arrays(data, {"gamma": 1.0})
        np.testing.assert_array_equal(indices, np.arange(15))
        assert embeddings.tobytes() == data.reshape(15, 4).tobytes()
        assert report["n_tokens_out"] == 15

    def test_layout_produces_newline_mask(self):
        data = np.random.default_rng(2).standard_normal((2, 12, 4), dtype=np.float32)
        _, _, report = compress_arrays(
            data, {"gamma": 0.5, "seed": 9},
            layout={"rows_per_frame": 3, "cols_per_row": 4},
        )
        assert len(report["newline_mask"]) == 2 * 3


class TestValidation:
    def test_wrong_dtype_raises_before_compute(self):
        data = np.zeros((2, 3, 4), dtype=np.float64)
        with pytest.raises(TypeError, match="float32"):
            compress_arrays(data, {"gamma": 0.5})

    def test_wrong_rank_raises(self):
        with pytest.raises(TypeError, match=r"\(T, M, D\)"):
            compress_arrays(np.zeros((3, 4), dtype=np.float32), {"gamma": 0.5})

    def test_non_array_raises(self):
        with pytest.raises(TypeError, match="numpy array"):
            compress_arrays([[[1.0]]], {"gamma": 0.5})

    def test_unknown_config_key_raises(self):
        data = np.zeros((1, 2, 2), dtype=np.float32)
        with pytest.raises(TypeError, match="unknown config keys"):
            compress_arrays(data, {"gamma": 0.5, "turbo": True})

    def test_gamma_required(self):
        data = np.zeros((1, 2, 2), dtype=np.float32)
        with pytest.raises(TypeError, match="gamma"):
            compress_arrays(data, {"seed": 1})

    def test_non_contiguous_copies_with_warning(self):
        base = np.random.default_rng(3).standard_normal((2, 6, 8), dtype=np.float32)
        strided = base[:, ::2, :]
        with pytest.warns(RuntimeWarning, match="C-contiguous"):
            indices, _, _ = compress_arrays(strided, {"gamma": 0.5, "seed": 4})
        contiguous = np.ascontiguousarray(strided)
        indices2, _, _ = compress_arrays(contiguous, {"gamma": 0.5, "seed": 4})
        np.testing.assert_array_equal(indices, indices2)

    def test_contiguous_input_does_not_warn_or_mutate(self):
        data = np.random.default_rng(4).standard_normal((2, 4, 3), dtype=np.float32)
        before = data.tobytes()
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            compress_arrays(data, {"gamma": 0.5})
        assert data.tobytes() == before
        data[0, 0, 0] = 99.0  # caller's buffer stays writable


class TestCostModel:
    def test_reference_point(self):
        out = flops(6272)
        assert out["tflops"] == pytest.approx(48.82, rel=0.005)
        assert out["total"] == pytest.approx(out["per_layer"] * 28)
