"""Theoretical FLOPs of the visual-token stream through a GQA transformer.

Per layer, a stream of n tokens costs

    2*n*D*(h_kv*d)  +  2*n*D^2  +  2*n^2*D  +  3*n*D*D'

covering key/value projections, query/output projections, attention score and
value application, and a three-matrix gated FFN.  The total multiplies by the
layer count.  Backbone dimension presets live in ``data/presets.json``; the
qwen2-7b entry follows the published model configuration (hidden 3584, FFN
18944, 28 layers, 4 KV heads of dim 128).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources


@dataclass(frozen=True)
class CostModelSpec:
    """Transformer dimensions needed to price a token stream."""

    hidden_dim: int
    ffn_dim: int
    n_layers: int
    kv_heads: int
    head_dim: int

    def __post_init__(self):
        for name in ("hidden_dim", "ffn_dim", "n_layers", "kv_heads", "head_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")


def per_layer_flops(n_tokens: int, spec: CostModelSpec) -> float:
    """Float64 per-layer FLOPs for n visual tokens."""
    return float(per_layer_flops_exact(n_tokens, spec))


def per_layer_flops_exact(n_tokens: int, spec: CostModelSpec) -> int:
    """Exact integer per-layer FLOPs (arbitrary-precision)."""
    n = int(n_tokens)
    if n < 0:
        raise ValueError(f"token count must be >= 0, got {n_tokens}")
    d_model, d_ffn = spec.hidden_dim, spec.ffn_dim
    kv = spec.kv_heads * spec.head_dim
    return 2 * n * d_model * kv + 2 * n * d_model**2 + 2 * n**2 * d_model + 3 * n * d_model * d_ffn


def flops(n_tokens: int, spec: CostModelSpec) -> float:
    """Total FLOPs over all layers, as float64."""
    return spec.n_layers * per_layer_flops(n_tokens, spec)


def flops_exact(n_tokens: int, spec: CostModelSpec) -> int:
    """Total FLOPs over all layers, in exact integer arithmetic."""
    return spec.n_layers * per_layer_flops_exact(n_tokens, spec)


def tflops(n_tokens: int, spec: CostModelSpec) -> float:
    return flops(n_tokens, spec) / 1e12


def available_presets() -> list[str]:
    return sorted(_presets().keys())


def load_preset(name: str) -> CostModelSpec:
    """Dimension preset by name, e.g. ``qwen2-7b``."""
    presets = _presets()
    if name not in presets:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(presets)}")
    p = presets[name]
    return CostModelSpec(
        hidden_dim=int(p["hidden_dim"]),
        ffn_dim=int(p["ffn_dim"]),
        n_layers=int(p["n_layers"]),
        kv_heads=int(p["kv_heads"]),
        head_dim=int(p["head_dim"]),
    )


def _presets() -> dict:
    with resources.files("kitoke").joinpath("data/presets.json").open("r") as f:
        return json.load(f)
