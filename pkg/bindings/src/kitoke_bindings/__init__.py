"""In-process bindings for the kitoke compression engine.

Inference pipelines hand over the visual-token stack as a plain numpy array
and a config mapping; the engine runs on the caller's buffer and returns
fresh arrays.  Contiguous float32 input is consumed zero-copy (the engine
reads through an immutable view and keeps no reference after the call);
anything else that is still float32 is copied once, with a warning.  Shape
and dtype are validated before any numeric work starts, and the heavy
kernels run inside numpy's BLAS/ufunc loops, which release the interpreter
lock, so concurrent host threads can overlap calls.

Output is bit-identical to the `kitoke` CLI for the same tensor, config, and
seed.
"""

from __future__ import annotations

import warnings
from typing import Any, Mapping

import numpy as np

import kitoke
from kitoke import LayoutSpec, RetentionConfig, TokenTensor

__version__ = kitoke.__version__

__all__ = ["compress_arrays", "flops", "__version__"]

_CONFIG_KEYS = frozenset(
    (
        "gamma",
        "alpha",
        "tau_diff",
        "tau_dev",
        "tau_rel",
        "selection_mode",
        "merge_mode",
        "seed",
    )
)


def _validate_view(array: Any) -> np.ndarray:
    if not isinstance(array, np.ndarray):
        raise TypeError(f"expected a numpy array, got {type(array).__name__}")
    if array.dtype != np.float32:
        raise TypeError(f"token buffer must be float32, got {array.dtype}")
    if array.ndim != 3:
        raise TypeError(f"token buffer must have shape (T, M, D), got {array.shape}")
    if not array.flags.c_contiguous:
        warnings.warn(
            "token buffer is not C-contiguous; compressing a one-time copy",
            RuntimeWarning,
            stacklevel=3,
        )
        array = np.ascontiguousarray(array)
    return array


def _config_from_mapping(config: Mapping[str, Any]) -> RetentionConfig:
    unknown = set(config) - _CONFIG_KEYS
    if unknown:
        raise TypeError(
            f"unknown config keys {sorted(unknown)}; accepted: {sorted(_CONFIG_KEYS)}"
        )
    if "gamma" not in config:
        raise TypeError("config must provide 'gamma'")
    return RetentionConfig(**dict(config))


def _layout_from_mapping(layout: Mapping[str, Any] | None) -> LayoutSpec | None:
    if layout is None:
        return None
    return LayoutSpec(
        rows_per_frame=int(layout["rows_per_frame"]),
        cols_per_row=int(layout["cols_per_row"]),
        newline_after_row=bool(layout.get("newline_after_row", True)),
    )


def compress_arrays(
    array: np.ndarray,
    config: Mapping[str, Any],
    layout: Mapping[str, Any] | None = None,
) -> tuple[np.ndarray, np.ndarray, dict]:
    """Compress an in-memory ``(T, M, D)`` float32 token stack.

    Parameters
    ----------
    array : np.ndarray
        Row-major float32 token embeddings.  The buffer is only read and no
        reference to it survives the call.
    config : mapping
        Keys are a subset of the retention config (``gamma`` is required;
        ``alpha``, ``tau_diff``, ``tau_dev``, ``tau_rel``, ``selection_mode``,
        ``merge_mode``, ``seed`` default to the engine's reference setting).
    layout : mapping, optional
        ``{"rows_per_frame": H, "cols_per_row": W}`` for grid-layout
        backbones; adds a ``newline_mask`` entry to the report.

    Returns
    -------
    (retained_indices, merged_embeddings, report)
        Ascending int64 original-token indices of length K, the K x D
        float32 merged embeddings, and the run-report dict.
    """
    view = _validate_view(array)
    cfg = _config_from_mapping(config)
    result = kitoke.compress(TokenTensor(view), cfg, _layout_from_mapping(layout))
    report = dict(result.report)
    if result.newline_mask is not None:
        report["newline_mask"] = [bool(b) for b in result.newline_mask]
    return result.retained_indices, result.merged_embeddings, report


def flops(n_tokens: int, preset: str = "qwen2-7b") -> dict:
    """Transformer FLOPs of an ``n_tokens`` visual stream for a preset backbone."""
    spec = kitoke.load_preset(preset)
    return {
        "tokens": int(n_tokens),
        "preset": preset,
        "per_layer": kitoke.per_layer_flops(n_tokens, spec),
        "total": kitoke.flops(n_tokens, spec),
        "tflops": kitoke.tflops(n_tokens, spec),
    }
