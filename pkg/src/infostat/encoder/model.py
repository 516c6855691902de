"""Self-attention encoder over encoded pseudo sentences.

The forward pass sums token, position and segment embeddings, applies layer
normalization, then n_layers of (multi-head attention + residual + norm,
feed-forward + residual + norm). The class distribution is read from the
hidden state at the [IS] position. All gradients are computed analytically
by the mirrored backward pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpus import ISLabel, LABELS
from .config import ModelConfig
from .layers import (attention_weights, dense_backward, dense_forward,
                     dropout_mask, gelu_backward, gelu_forward,
                     layer_norm_backward, layer_norm_forward, softmax,
                     softmax_backward)
from .params import Params, zeros_like_params


@dataclass(frozen=True)
class Batch:
    """Encoded pseudo sentences, one row per mention."""

    ids: np.ndarray        # [B, L] int
    mask: np.ndarray       # [B, L] 0/1
    segments: np.ndarray   # [B, L] 0/1
    is_index: np.ndarray   # [B] position of [IS] per row
    labels: np.ndarray | None = None          # [B] class indices, optional
    mention_ids: tuple[str, ...] | None = None

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    def slice(self, rows) -> "Batch":
        return Batch(ids=self.ids[rows], mask=self.mask[rows],
                     segments=self.segments[rows], is_index=self.is_index[rows],
                     labels=None if self.labels is None else self.labels[rows],
                     mention_ids=None if self.mention_ids is None
                     else tuple(np.asarray(self.mention_ids, dtype=object)[rows]))


@dataclass(frozen=True)
class Prediction:
    mention_id: str
    probabilities: np.ndarray  # length-8 simplex vector
    label: ISLabel


def _as_batched(ids, mask, segments):
    ids = np.asarray(ids)
    single = ids.ndim == 1
    def up(a):
        a = np.asarray(a)
        return a[None, :] if single else a
    return up(ids), up(mask), up(segments), single


def _split_heads(x: np.ndarray, n_heads: int) -> np.ndarray:
    b, l, d = x.shape
    return x.reshape(b, l, n_heads, d // n_heads).transpose(0, 2, 1, 3)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    b, h, l, dk = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, l, h * dk)


def _maybe_dropout(x, rate, train_mode, seed, step, name):
    if not train_mode or rate == 0.0:
        return x, None
    keep = dropout_mask(x.shape, rate, seed, step, name, x.dtype)
    return x * keep, keep


def _layer_forward(x, mask, i, params, config, train_mode, seed, step):
    p = f"layer{i}"
    rate = config.dropout_rate

    q_lin, cache_q = dense_forward(x, params[f"{p}.attn.wq"], params[f"{p}.attn.bq"])
    k_lin, cache_k = dense_forward(x, params[f"{p}.attn.wk"], params[f"{p}.attn.bk"])
    v_lin, cache_v = dense_forward(x, params[f"{p}.attn.wv"], params[f"{p}.attn.bv"])
    q = _split_heads(q_lin, config.n_heads)
    k = _split_heads(k_lin, config.n_heads)
    v = _split_heads(v_lin, config.n_heads)

    attn = attention_weights(q, k, mask[:, None, :])
    attn_kept, attn_drop = _maybe_dropout(attn, rate, train_mode, seed, step,
                                          f"{p}.attn_probs")
    context = _merge_heads(attn_kept @ v)
    o_lin, cache_o = dense_forward(context, params[f"{p}.attn.wo"],
                                   params[f"{p}.attn.bo"])
    o, o_drop = _maybe_dropout(o_lin, rate, train_mode, seed, step,
                               f"{p}.attn_out")
    x1, cache_ln1 = layer_norm_forward(x + o, params[f"{p}.attn.norm_scale"],
                                       params[f"{p}.attn.norm_offset"])

    z1, cache_f1 = dense_forward(x1, params[f"{p}.ffn.w1"], params[f"{p}.ffn.b1"])
    a1, cache_g = gelu_forward(z1)
    z2, cache_f2 = dense_forward(a1, params[f"{p}.ffn.w2"], params[f"{p}.ffn.b2"])
    u, u_drop = _maybe_dropout(z2, rate, train_mode, seed, step, f"{p}.ffn_out")
    x2, cache_ln2 = layer_norm_forward(x1 + u, params[f"{p}.ffn.norm_scale"],
                                       params[f"{p}.ffn.norm_offset"])

    cache = dict(q=q, k=k, v=v, attn=attn, attn_kept=attn_kept,
                 attn_drop=attn_drop, o_drop=o_drop, u_drop=u_drop,
                 cache_q=cache_q, cache_k=cache_k, cache_v=cache_v,
                 cache_o=cache_o, cache_ln1=cache_ln1, cache_f1=cache_f1,
                 cache_g=cache_g, cache_f2=cache_f2, cache_ln2=cache_ln2)
    return x2, cache


def _layer_backward(dx2, cache, i, params, config, grads):
    p = f"layer{i}"
    scale = 1.0 / np.sqrt(config.d_head)

    dres2, dg, db = layer_norm_backward(dx2, cache["cache_ln2"])
    grads[f"{p}.ffn.norm_scale"] += dg
    grads[f"{p}.ffn.norm_offset"] += db
    du = dres2 if cache["u_drop"] is None else dres2 * cache["u_drop"]
    da1, dw2, db2 = dense_backward(du, cache["cache_f2"])
    grads[f"{p}.ffn.w2"] += dw2
    grads[f"{p}.ffn.b2"] += db2
    dz1 = gelu_backward(da1, cache["cache_g"])
    dx1_ffn, dw1, db1 = dense_backward(dz1, cache["cache_f1"])
    grads[f"{p}.ffn.w1"] += dw1
    grads[f"{p}.ffn.b1"] += db1
    dx1 = dres2 + dx1_ffn

    dres1, dg, db = layer_norm_backward(dx1, cache["cache_ln1"])
    grads[f"{p}.attn.norm_scale"] += dg
    grads[f"{p}.attn.norm_offset"] += db
    do = dres1 if cache["o_drop"] is None else dres1 * cache["o_drop"]
    dcontext, dwo, dbo = dense_backward(do, cache["cache_o"])
    grads[f"{p}.attn.wo"] += dwo
    grads[f"{p}.attn.bo"] += dbo

    dctx_heads = _split_heads(dcontext, config.n_heads)
    attn_kept, v = cache["attn_kept"], cache["v"]
    dattn_kept = dctx_heads @ np.swapaxes(v, -1, -2)
    dv = np.swapaxes(attn_kept, -1, -2) @ dctx_heads
    dattn = dattn_kept if cache["attn_drop"] is None \
        else dattn_kept * cache["attn_drop"]
    dscores = softmax_backward(dattn, cache["attn"])
    dq = (dscores @ cache["k"]) * scale
    dk = (np.swapaxes(dscores, -1, -2) @ cache["q"]) * scale

    dx_q, dwq, dbq = dense_backward(_merge_heads(dq), cache["cache_q"])
    dx_k, dwk, dbk = dense_backward(_merge_heads(dk), cache["cache_k"])
    dx_v, dwv, dbv = dense_backward(_merge_heads(dv), cache["cache_v"])
    grads[f"{p}.attn.wq"] += dwq
    grads[f"{p}.attn.bq"] += dbq
    grads[f"{p}.attn.wk"] += dwk
    grads[f"{p}.attn.bk"] += dbk
    grads[f"{p}.attn.wv"] += dwv
    grads[f"{p}.attn.bv"] += dbv

    return dres1 + dx_q + dx_k + dx_v


def forward(ids, mask, segments, params: Params, config: ModelConfig,
            train_mode: bool = False, dropout_seed: int = 0, step: int = 0):
    """Run the encoder; returns (hidden_states, cache for backward).

    Accepts a single sequence [L] or a batch [B, L]; sequences must be
    padded to exactly config.max_len. Dropout is active only in train_mode
    and is a deterministic function of (dropout_seed, step, tensor name).
    """
    ids_b, mask_b, seg_b, single = _as_batched(ids, mask, segments)
    if ids_b.shape != mask_b.shape or ids_b.shape != seg_b.shape:
        raise ValueError("ids, mask and segments must share one shape")
    if ids_b.shape[1] != config.max_len:
        raise ValueError(f"sequence length {ids_b.shape[1]} does not match "
                         f"max_len={config.max_len}")
    if ids_b.min() < 0 or ids_b.max() >= config.vocab_size:
        raise ValueError("token id outside the vocabulary")
    if np.any(mask_b.sum(axis=1) == 0):
        raise ValueError("invalid empty sequence: a row has every position masked")

    dtype = np.dtype(config.dtype)
    emb = (params["embeddings.token"][ids_b]
           + params["embeddings.position"][None, :, :]
           + params["embeddings.segment"][seg_b]).astype(dtype, copy=False)
    x, cache_ln = layer_norm_forward(emb, params["embeddings.norm_scale"],
                                     params["embeddings.norm_offset"])
    x, emb_drop = _maybe_dropout(x, config.dropout_rate, train_mode,
                                 dropout_seed, step, "embeddings")

    layer_caches = []
    mask_f = mask_b.astype(dtype)
    for i in range(config.n_layers):
        x, layer_cache = _layer_forward(x, mask_f, i, params, config,
                                        train_mode, dropout_seed, step)
        layer_caches.append(layer_cache)

    cache = dict(ids=ids_b, segments=seg_b, cache_ln=cache_ln,
                 emb_drop=emb_drop, layer_caches=layer_caches)
    return (x[0] if single else x), cache


def backward(d_hidden: np.ndarray, cache, params: Params,
             config: ModelConfig) -> Params:
    """Backpropagate a gradient at the final hidden states into all parameters."""
    grads = zeros_like_params(params)
    dx = d_hidden if d_hidden.ndim == 3 else d_hidden[None, :, :]
    for i in reversed(range(config.n_layers)):
        dx = _layer_backward(dx, cache["layer_caches"][i], i, params, config, grads)
    if cache["emb_drop"] is not None:
        dx = dx * cache["emb_drop"]
    demb, dg, db = layer_norm_backward(dx, cache["cache_ln"])
    grads["embeddings.norm_scale"] += dg
    grads["embeddings.norm_offset"] += db

    d = demb.shape[-1]
    flat = demb.reshape(-1, d)
    np.add.at(grads["embeddings.token"], cache["ids"].ravel(), flat)
    grads["embeddings.position"] += demb.sum(axis=0)
    np.add.at(grads["embeddings.segment"], cache["segments"].ravel(), flat)
    return grads


def classify(hidden_states: np.ndarray, is_index, params: Params,
             mask: np.ndarray | None = None) -> np.ndarray:
    """Class distribution from the hidden state at the [IS] position."""
    single = hidden_states.ndim == 2
    h = hidden_states[None] if single else hidden_states
    idx = np.atleast_1d(np.asarray(is_index, dtype=np.int64))
    if idx.min() < 0 or idx.max() >= h.shape[1]:
        raise ValueError("is_index outside the sequence")
    if mask is not None:
        m = np.asarray(mask)
        m = m[None] if m.ndim == 1 else m
        if np.any(m[np.arange(h.shape[0]), idx] == 0):
            raise ValueError("is_index points at padding")
    h_is = h[np.arange(h.shape[0]), idx]
    probs = softmax(h_is @ params["classifier.weight"] + params["classifier.bias"])
    return probs[0] if single else probs


def loss_and_gradients(batch: Batch, params: Params, config: ModelConfig,
                       train_mode: bool = True, dropout_seed: int = 0,
                       step: int = 0) -> tuple[float, Params]:
    """Mean cross-entropy over the batch and gradients for every parameter."""
    if batch.labels is None:
        raise ValueError("unlabeled example in batch: training requires labels")
    b = len(batch)
    hidden, cache = forward(batch.ids, batch.mask, batch.segments, params,
                            config, train_mode=train_mode,
                            dropout_seed=dropout_seed, step=step)
    rows = np.arange(b)
    if np.any(batch.mask[rows, batch.is_index] == 0):
        raise ValueError("is_index points at padding")
    h_is = hidden[rows, batch.is_index]
    logits = h_is @ params["classifier.weight"] + params["classifier.bias"]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    loss = float(-log_probs[rows, batch.labels].mean())

    probs = np.exp(log_probs)
    dlogits = probs.copy()
    dlogits[rows, batch.labels] -= 1.0
    dlogits /= b

    grads_head_w = h_is.T @ dlogits
    grads_head_b = dlogits.sum(axis=0)
    d_hidden = np.zeros_like(hidden)
    d_hidden[rows, batch.is_index] = dlogits @ params["classifier.weight"].T

    grads = backward(d_hidden, cache, params, config)
    grads["classifier.weight"] += grads_head_w
    grads["classifier.bias"] += grads_head_b
    return loss, grads


def predict_batch(batch: Batch, params: Params, config: ModelConfig) -> np.ndarray:
    """Probabilities [B, n_classes] for an encoded batch, dropout off."""
    hidden, _ = forward(batch.ids, batch.mask, batch.segments, params, config,
                        train_mode=False)
    return classify(hidden, batch.is_index, params, mask=batch.mask)


def predictions_from_probs(probs: np.ndarray,
                           mention_ids: tuple[str, ...]) -> list[Prediction]:
    """Argmax predictions; ties break toward the lowest class index."""
    out = []
    for row, mention_id in zip(probs, mention_ids):
        out.append(Prediction(mention_id=mention_id, probabilities=row,
                              label=LABELS[int(np.argmax(row))]))
    return out
