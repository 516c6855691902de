"""Forward/backward primitives for the self-attention encoder.

Everything is implemented directly on numpy arrays with explicit caches, so
the analytic gradients can be verified entry by entry against central
finite differences.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

from ..rng import counter_uniforms, derive_seed

_LN_EPS = 1e-12
_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


# ---------------------------------------------------------------------------
# Dense

def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    y = x @ w + b
    return y, (x, w)


def dense_backward(dy: np.ndarray, cache):
    x, w = cache
    flat_x = x.reshape(-1, x.shape[-1])
    flat_dy = dy.reshape(-1, dy.shape[-1])
    dw = flat_x.T @ flat_dy
    db = flat_dy.sum(axis=0)
    dx = dy @ w.T
    return dx, dw, db


# ---------------------------------------------------------------------------
# Layer normalization (over the last axis)

def layer_norm_forward(x: np.ndarray, scale: np.ndarray, offset: np.ndarray):
    mean = x.mean(axis=-1, keepdims=True)
    centered = x - mean
    var = np.mean(centered * centered, axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + _LN_EPS)
    x_hat = centered * inv_std
    y = scale * x_hat + offset
    return y, (x_hat, inv_std, scale)


def layer_norm_backward(dy: np.ndarray, cache):
    x_hat, inv_std, scale = cache
    d = x_hat.shape[-1]
    reduce_axes = tuple(range(dy.ndim - 1))
    dscale = (dy * x_hat).sum(axis=reduce_axes)
    doffset = dy.sum(axis=reduce_axes)
    dxhat = dy * scale
    dx = inv_std / d * (d * dxhat
                        - dxhat.sum(axis=-1, keepdims=True)
                        - x_hat * (dxhat * x_hat).sum(axis=-1, keepdims=True))
    return dx, dscale, doffset


# ---------------------------------------------------------------------------
# GELU (exact, erf-based)

def gelu_forward(z: np.ndarray):
    phi = 0.5 * (1.0 + erf(z * _INV_SQRT2))
    return z * phi, (z, phi)


def gelu_backward(da: np.ndarray, cache):
    z, phi = cache
    density = _INV_SQRT2PI * np.exp(-0.5 * z * z)
    return da * (phi + z * density)


# ---------------------------------------------------------------------------
# Softmax and scaled dot-product attention

def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_backward(dy: np.ndarray, y: np.ndarray, axis: int = -1) -> np.ndarray:
    return y * (dy - (dy * y).sum(axis=axis, keepdims=True))


def attention_weights(queries: np.ndarray, keys: np.ndarray,
                      mask: np.ndarray) -> np.ndarray:
    """Scaled dot-product attention distribution softmax(QK^T / sqrt(d_k)).

    `mask` holds 1 on real positions, 0 on padding; padded keys receive
    weight exactly 0. Accepts [L, d_k] with mask [L], or any batched layout
    [..., L, d_k] with mask broadcastable to [..., L]. A sequence whose
    positions are all masked is an invalid empty sequence.
    """
    q = np.asarray(queries, dtype=np.float64 if queries.dtype.kind != "f"
                   else queries.dtype)
    k = np.asarray(keys, dtype=q.dtype)
    m = np.asarray(mask)
    if q.shape[:-2] != k.shape[:-2] or q.shape[-1] != k.shape[-1]:
        raise ValueError(f"incompatible query/key shapes {q.shape} vs {k.shape}")
    key_valid = np.broadcast_to(m != 0, q.shape[:-2] + (k.shape[-2],))
    if not np.all(key_valid.any(axis=-1)):
        raise ValueError("invalid empty sequence: a row has every position masked")
    scale = 1.0 / np.sqrt(q.shape[-1])
    scores = (q @ np.swapaxes(k, -1, -2)) * scale
    scores = np.where(key_valid[..., None, :], scores, -np.inf)
    return softmax(scores, axis=-1)


# ---------------------------------------------------------------------------
# Dropout (counter-based PRNG keyed by seed, step, and tensor name)

def dropout_mask(shape: tuple[int, ...], rate: float, seed: int, step: int,
                 name: str, dtype) -> np.ndarray:
    """Inverted-dropout keep mask, already scaled by 1/(1-rate).

    The mask is a pure function of (seed, step, name) and the shape, never
    of the data, so replays are bit-identical.
    """
    n = int(np.prod(shape)) if shape else 1
    u = counter_uniforms(derive_seed(seed, "dropout", step, name), n)
    keep = (u >= rate).astype(dtype) / (1.0 - rate)
    return keep.reshape(shape)
