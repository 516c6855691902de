import mpmath
import numpy as np
import pytest

from infostat.encoder import attention_weights
from infostat.rng import SplitMix64, counter_uniforms


def test_singleton_sequence_attends_to_itself():
    q = np.array([[0.3, -1.2]])
    k = np.array([[2.0, 0.5]])
    w = attention_weights(q, k, np.array([1]))
    assert w.shape == (1, 1)
    assert w[0, 0] == 1.0


def test_zero_scores_give_uniform_rows():
    n = 5
    q = np.zeros((n, 4))
    k = np.zeros((n, 4))
    w = attention_weights(q, k, np.ones(n, dtype=int))
    assert np.allclose(w, 1.0 / n)


def test_matches_extended_precision_oracle():
    # Brute-force softmax(QK^T/sqrt(d)) at 50 significant digits.
    rng = SplitMix64(123)
    n, d = 4, 6
    q = np.array([[rng.uniform() * 4 - 2 for _ in range(d)] for _ in range(n)])
    k = np.array([[rng.uniform() * 4 - 2 for _ in range(d)] for _ in range(n)])
    w = attention_weights(q, k, np.ones(n, dtype=int))

    mpmath.mp.dps = 50
    scale = 1 / mpmath.sqrt(d)
    for i in range(n):
        scores = [sum(mpmath.mpf(q[i, t]) * mpmath.mpf(k[j, t])
                      for t in range(d)) * scale for j in range(n)]
        exps = [mpmath.e ** s for s in scores]
        total = sum(exps)
        for j in range(n):
            assert abs(w[i, j] - float(exps[j] / total)) < 1e-10


def test_masked_keys_get_exactly_zero_weight():
    rng = SplitMix64(7)
    n, d = 6, 4
    q = np.array([[rng.uniform() for _ in range(d)] for _ in range(n)])
    k = np.array([[rng.uniform() for _ in range(d)] for _ in range(n)])
    mask = np.array([1, 1, 1, 1, 0, 0])
    w = attention_weights(q, k, mask)
    assert np.all(w[:, 4:] == 0.0)
    assert np.allclose(w[:, :4].sum(axis=1), 1.0, atol=1e-6)


def test_rows_normalize_over_many_random_shapes():
    for trial in range(100):
        rng = SplitMix64(trial)
        b = 1 + rng.randint(3)
        h = 1 + rng.randint(3)
        n = 2 + rng.randint(6)
        d = 1 + rng.randint(8)
        size = b * h * n * d
        q = (counter_uniforms(trial * 2 + 1, size) * 6 - 3).reshape(b, h, n, d)
        k = (counter_uniforms(trial * 2 + 2, size) * 6 - 3).reshape(b, h, n, d)
        mask = np.zeros((b, n), dtype=int)
        for row in range(b):
            mask[row, :1 + rng.randint(n)] = 1
        w = attention_weights(q, k, mask[:, None, :])
        sums = w.sum(axis=-1)
        assert np.allclose(sums, 1.0, atol=1e-6)
        masked = np.broadcast_to((mask == 0)[:, None, None, :], w.shape)
        assert np.all(w[masked] == 0.0)


def test_all_masked_sequence_is_an_error():
    q = np.zeros((2, 3))
    k = np.zeros((2, 3))
    with pytest.raises(ValueError, match="empty sequence"):
        attention_weights(q, k, np.array([0, 0]))


def test_incompatible_shapes_are_rejected():
    with pytest.raises(ValueError, match="incompatible"):
        attention_weights(np.zeros((2, 3)), np.zeros((2, 4)), np.array([1, 1]))
