"""What compression buys at the transformer level.

Prices the visual-token stream of a 32-frame, 196-tokens-per-frame video
through a 7B grouped-query-attention backbone at several retention ratios.
"""

import math

from kitoke import flops, flops_exact, load_preset, tflops

spec = load_preset("qwen2-7b")
print(f"backbone: hidden {spec.hidden_dim}, ffn {spec.ffn_dim}, "
      f"{spec.n_layers} layers, {spec.kv_heads} kv-heads x {spec.head_dim}")

n_full = 32 * 196
print(f"\n{'gamma':>6} {'tokens':>7} {'TFLOPs':>8} {'speedup':>8}")
for gamma in (1.0, 0.25, 0.10, 0.05, 0.01):
    n = math.floor(gamma * n_full)
    cost = tflops(n, spec)
    speedup = tflops(n_full, spec) / cost
    print(f"{gamma:6.2f} {n:7d} {cost:8.2f} {speedup:7.1f}x")

# The quadratic attention term loses dominance as n shrinks: at small n the
# cost is nearly linear, so halving tokens halves FLOPs.
print("\nflops(2n)/flops(n):")
for n in (50, 500, 5000, 50000):
    print(f"  n = {n:6d}: {flops(2 * n, spec) / flops(n, spec):.3f}")

# Integer and float paths agree to full reporting precision.
n = 6272
exact = flops_exact(n, spec)
print(f"\nexact integer FLOPs at n={n}: {exact:,}")
print(f"float64 path relative gap: {abs(flops(n, spec) - exact) / exact:.2e}")
