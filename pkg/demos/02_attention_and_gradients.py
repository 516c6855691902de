"""Inspect the encoder internals: attention masks and gradient checking.

Run:  python demos/02_attention_and_gradients.py
"""

import numpy as np

from infostat.encoder import (ModelConfig, attention_weights, gradient_check,
                              make_check_batch)

# Scaled dot-product attention with a padding mask: the last two positions
# are padding and receive exactly zero weight, every row still sums to one.
rng = np.random.default_rng  # only for the demo display; library code
# draws from its own SplitMix64 streams.
q = np.linspace(-1, 1, 6 * 4).reshape(6, 4)
k = np.linspace(1, -1, 6 * 4).reshape(6, 4)
mask = np.array([1, 1, 1, 1, 0, 0])
weights = attention_weights(q, k, mask)
np.set_printoptions(precision=3, suppress=True)
print("attention weights (rows = queries):")
print(weights)
print("row sums:", weights.sum(axis=1))

# Analytic gradients vs central finite differences on a small model.
config = ModelConfig(n_layers=2, d_model=16, n_heads=4, d_ff=64, max_len=16,
                     vocab_size=32, dropout_rate=0.0)
batch = make_check_batch(config, seed=0, batch_size=4)
report = gradient_check(config, batch, seed=0, epsilon=1e-5)
print(f"\ngradient check over {report.n_entries} parameter entries")
print(f"max relative error: {report.max_relative_error:.3e}")
worst = sorted(report.per_tensor.items(), key=lambda kv: -kv[1])[:5]
for name, err in worst:
    print(f"  {name:<28} {err:.3e}")
