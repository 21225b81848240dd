"""A small trainable transformer-style sentence encoder in numpy.

Float64 throughout, with hand-written backward passes so the whole model
is verifiable against central finite differences.  Layout per layer is the
post-norm arrangement: ``LN(x + attention(x))`` then ``LN(h + ffn(h))``.
Variable-length batches are padded and key-masked; padded positions never
influence valid ones, in either direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .lexical import CLS_ID, PAD_ID, SEP_ID

LN_EPS = 1e-5
MASK_FILL = -1e30
INIT_STD = 0.02


@dataclass
class EncoderConfig:
    vocab_size: int
    d_model: int = 128
    n_layers: int = 2
    n_heads: int = 4
    d_ff: Optional[int] = None
    d_hidden: int = 64
    max_tokens_per_sentence: int = 64
    max_sentences_per_instance: int = 256
    # Init scale for a from-scratch encoder.  Small-std inits leave the
    # [CLS] state nearly content-free, so sentence/query dot products start
    # uninformative and attention polarity drifts; a larger scale seeds the
    # similarity geometry that training then sharpens.
    init_std: float = INIT_STD

    def __post_init__(self):
        if self.d_ff is None:
            self.d_ff = 4 * self.d_model
        if self.d_model % self.n_heads != 0:
            raise ValueError(
                f"d_model={self.d_model} not divisible by n_heads={self.n_heads}")

    def to_json(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "d_model": self.d_model,
            "n_layers": self.n_layers,
            "n_heads": self.n_heads,
            "d_ff": self.d_ff,
            "d_hidden": self.d_hidden,
            "max_tokens_per_sentence": self.max_tokens_per_sentence,
            "max_sentences_per_instance": self.max_sentences_per_instance,
            "init_std": self.init_std,
        }

    @classmethod
    def from_json(cls, data: dict) -> "EncoderConfig":
        return cls(**data)


def parameter_shapes(cfg: EncoderConfig, n_categories: int) -> dict[str, tuple]:
    shapes: dict[str, tuple] = {
        "token_emb": (cfg.vocab_size, cfg.d_model),
        "pos_emb": (cfg.max_tokens_per_sentence + 1, cfg.d_model),
        "proj_w": (cfg.d_model, cfg.d_hidden),
        "proj_b": (cfg.d_hidden,),
        "head_w1": (2 * cfg.d_hidden, cfg.d_hidden),
        "head_b1": (cfg.d_hidden,),
        "head_w2": (cfg.d_hidden,),
        "head_b2": (),
        "indicator": (n_categories, cfg.d_hidden),
    }
    for i in range(cfg.n_layers):
        p = f"layers.{i}."
        shapes.update({
            p + "attn_wq": (cfg.d_model, cfg.d_model),
            p + "attn_bq": (cfg.d_model,),
            p + "attn_wk": (cfg.d_model, cfg.d_model),
            p + "attn_bk": (cfg.d_model,),
            p + "attn_wv": (cfg.d_model, cfg.d_model),
            p + "attn_bv": (cfg.d_model,),
            p + "attn_wo": (cfg.d_model, cfg.d_model),
            p + "attn_bo": (cfg.d_model,),
            p + "ln1_gamma": (cfg.d_model,),
            p + "ln1_beta": (cfg.d_model,),
            p + "ffn_w1": (cfg.d_model, cfg.d_ff),
            p + "ffn_b1": (cfg.d_ff,),
            p + "ffn_w2": (cfg.d_ff, cfg.d_model),
            p + "ffn_b2": (cfg.d_model,),
            p + "ln2_gamma": (cfg.d_model,),
            p + "ln2_beta": (cfg.d_model,),
        })
    return shapes


def init_params(cfg: EncoderConfig, n_categories: int, seed: int) -> dict[str, np.ndarray]:
    """Gaussian(0, 0.02) weights, zero biases, unit layer-norm gains."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in parameter_shapes(cfg, n_categories).items():
        base = name.rsplit(".", 1)[-1]
        if "gamma" in base:
            params[name] = np.ones(shape, dtype=np.float64)
        elif "beta" in base or base.startswith(("attn_b", "ffn_b")) or \
                base in ("proj_b", "head_b1", "head_b2"):
            params[name] = np.zeros(shape, dtype=np.float64)
        else:
            params[name] = rng.normal(0.0, cfg.init_std, size=shape)
    # Content-first special tokens: zeroing [CLS]/[SEP]/[PAD] rows (and the
    # slot [CLS] occupies) makes the initial [CLS] state a pure attention
    # pool of the content tokens instead of a shared random constant, so
    # sentence/query similarities start lexically grounded.  A random [SEP]
    # row would likewise give every path-style query a large common
    # component that swamps the content at initialization.
    params["token_emb"][CLS_ID] = 0.0
    params["token_emb"][SEP_ID] = 0.0
    params["token_emb"][PAD_ID] = 0.0
    params["pos_emb"][0] = 0.0
    return params


def zeros_like_params(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(value) for name, value in params.items()}


def _softmax_last(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _layer_norm_forward(x, gamma, beta):
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * inv_std
    return gamma * xhat + beta, (xhat, inv_std)


def _layer_norm_backward(dy, cache, gamma):
    xhat, inv_std = cache
    dgamma = (dy * xhat).sum(axis=tuple(range(dy.ndim - 1)))
    dbeta = dy.sum(axis=tuple(range(dy.ndim - 1)))
    dxhat = dy * gamma
    mean_dxhat = dxhat.mean(axis=-1, keepdims=True)
    mean_dxhat_xhat = (dxhat * xhat).mean(axis=-1, keepdims=True)
    dx = inv_std * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat)
    return dx, dgamma, dbeta


def _split_heads(x, n_heads):
    b, t, d = x.shape
    return x.reshape(b, t, n_heads, d // n_heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    b, h, t, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * dh)


def _layer_forward(params, prefix, cfg, x, key_mask):
    p = lambda s: params[prefix + s]
    q = x @ p("attn_wq") + p("attn_bq")
    k = x @ p("attn_wk") + p("attn_bk")
    v = x @ p("attn_wv") + p("attn_bv")
    qh, kh, vh = (_split_heads(a, cfg.n_heads) for a in (q, k, v))
    scale = 1.0 / np.sqrt(qh.shape[-1])
    scores = (qh @ kh.swapaxes(-1, -2)) * scale
    scores = np.where(key_mask[:, None, None, :], scores, MASK_FILL)
    attn = _softmax_last(scores)
    ctx = _merge_heads(attn @ vh)
    attn_out = ctx @ p("attn_wo") + p("attn_bo")

    res1 = x + attn_out
    h1, ln1_cache = _layer_norm_forward(res1, p("ln1_gamma"), p("ln1_beta"))

    ffn_pre = h1 @ p("ffn_w1") + p("ffn_b1")
    ffn_act = np.maximum(ffn_pre, 0.0)
    ffn_out = ffn_act @ p("ffn_w2") + p("ffn_b2")

    res2 = h1 + ffn_out
    h2, ln2_cache = _layer_norm_forward(res2, p("ln2_gamma"), p("ln2_beta"))

    cache = {
        "x": x, "qh": qh, "kh": kh, "vh": vh, "attn": attn, "ctx": ctx,
        "scale": scale, "ln1": ln1_cache, "h1": h1,
        "ffn_pre": ffn_pre, "ffn_act": ffn_act, "ln2": ln2_cache,
    }
    return h2, cache


def _layer_backward(params, grads, prefix, cfg, cache, dh2):
    p = lambda s: params[prefix + s]
    g = lambda s: grads[prefix + s]
    x = cache["x"]
    flat = lambda a: a.reshape(-1, a.shape[-1])

    dres2, dg2, db2 = _layer_norm_backward(dh2, cache["ln2"], p("ln2_gamma"))
    grads[prefix + "ln2_gamma"] += dg2
    grads[prefix + "ln2_beta"] += db2

    dffn_out = dres2
    grads[prefix + "ffn_w2"] += flat(cache["ffn_act"]).T @ flat(dffn_out)
    grads[prefix + "ffn_b2"] += dffn_out.sum(axis=(0, 1))
    dffn_act = dffn_out @ p("ffn_w2").T
    dffn_pre = dffn_act * (cache["ffn_pre"] > 0)
    grads[prefix + "ffn_w1"] += flat(cache["h1"]).T @ flat(dffn_pre)
    grads[prefix + "ffn_b1"] += dffn_pre.sum(axis=(0, 1))
    dh1 = dres2 + dffn_pre @ p("ffn_w1").T

    dres1, dg1, db1 = _layer_norm_backward(dh1, cache["ln1"], p("ln1_gamma"))
    grads[prefix + "ln1_gamma"] += dg1
    grads[prefix + "ln1_beta"] += db1

    dattn_out = dres1
    grads[prefix + "attn_wo"] += flat(cache["ctx"]).T @ flat(dattn_out)
    grads[prefix + "attn_bo"] += dattn_out.sum(axis=(0, 1))
    dctx = _split_heads(dattn_out @ p("attn_wo").T, cfg.n_heads)

    attn, vh = cache["attn"], cache["vh"]
    dattn = dctx @ vh.swapaxes(-1, -2)
    dvh = attn.swapaxes(-1, -2) @ dctx
    dscores = (dattn - (dattn * attn).sum(axis=-1, keepdims=True)) * attn
    dqh = (dscores @ cache["kh"]) * cache["scale"]
    dkh = (dscores.swapaxes(-1, -2) @ cache["qh"]) * cache["scale"]

    dq, dk, dv = (_merge_heads(a) for a in (dqh, dkh, dvh))
    dx = dres1
    for name, dmat in (("attn_wq", dq), ("attn_wk", dk), ("attn_wv", dv)):
        grads[prefix + name] += flat(x).T @ flat(dmat)
        grads[prefix + name.replace("w", "b")] += dmat.sum(axis=(0, 1))
        dx = dx + dmat @ p(name).T
    return dx


def pad_batch(
    sequences: Sequence[Sequence[int]], prepend_cls: bool, max_tokens: int
) -> tuple[np.ndarray, np.ndarray]:
    """Pad token-id lists into (ids, mask) arrays, truncating to the cap."""
    trimmed = []
    for seq in sequences:
        seq = list(seq)[:max_tokens]
        if not seq:
            raise ValueError("empty token sequence")
        trimmed.append(([CLS_ID] + seq) if prepend_cls else seq)
    width = max(len(s) for s in trimmed)
    ids = np.full((len(trimmed), width), PAD_ID, dtype=np.int64)
    mask = np.zeros((len(trimmed), width), dtype=bool)
    for i, seq in enumerate(trimmed):
        ids[i, : len(seq)] = seq
        mask[i, : len(seq)] = True
    return ids, mask


@dataclass
class EncodeCache:
    ids: np.ndarray
    mask: np.ndarray
    layer_caches: list[dict]
    hidden: np.ndarray            # final hidden states of unique sequences
    gather: np.ndarray            # row index into unique sequences per input
    mode: str                     # "cls" or "mean"
    cls_hidden: Optional[np.ndarray] = None   # (n_unique, d_model), cls mode
    valid_counts: Optional[np.ndarray] = None  # (n_unique,), mean mode


def _dedupe(sequences: Sequence[Sequence[int]]) -> tuple[list[tuple], np.ndarray]:
    index: dict[tuple, int] = {}
    gather = np.empty(len(sequences), dtype=np.int64)
    unique: list[tuple] = []
    for i, seq in enumerate(sequences):
        key = tuple(seq)
        j = index.get(key)
        if j is None:
            j = len(unique)
            index[key] = j
            unique.append(key)
        gather[i] = j
    return unique, gather


def _encoder_stack_forward(params, cfg, ids, mask):
    t = ids.shape[1]
    x = params["token_emb"][ids] + params["pos_emb"][:t]
    layer_caches = []
    for i in range(cfg.n_layers):
        x, cache = _layer_forward(params, f"layers.{i}.", cfg, x, mask)
        layer_caches.append(cache)
    return x, layer_caches


def _encoder_stack_backward(params, grads, cfg, ids, mask, layer_caches, dh):
    for i in reversed(range(cfg.n_layers)):
        dh = _layer_backward(params, grads, f"layers.{i}.", cfg, layer_caches[i], dh)
    dh = dh * mask[..., None]
    np.add.at(grads["token_emb"], ids, dh)
    grads["pos_emb"][: ids.shape[1]] += dh.sum(axis=0)


def encode_cls(
    params: dict, cfg: EncoderConfig, sequences: Sequence[Sequence[int]]
) -> tuple[np.ndarray, EncodeCache]:
    """Sentence embeddings: project the [CLS] hidden state to d_hidden.

    Identical sequences share one forward pass (and thus identical rows).
    """
    unique, gather = _dedupe(sequences)
    ids, mask = pad_batch(unique, prepend_cls=True,
                          max_tokens=cfg.max_tokens_per_sentence)
    hidden, layer_caches = _encoder_stack_forward(params, cfg, ids, mask)
    cls_hidden = hidden[:, 0, :]
    s = cls_hidden @ params["proj_w"] + params["proj_b"]
    cache = EncodeCache(ids=ids, mask=mask, layer_caches=layer_caches,
                        hidden=hidden, gather=gather, mode="cls",
                        cls_hidden=cls_hidden)
    return s[gather], cache


def encode_cls_backward(params, grads, cfg, cache: EncodeCache, ds: np.ndarray) -> None:
    ds_unique = np.zeros((cache.cls_hidden.shape[0], ds.shape[1]), dtype=np.float64)
    np.add.at(ds_unique, cache.gather, ds)
    grads["proj_w"] += cache.cls_hidden.T @ ds_unique
    grads["proj_b"] += ds_unique.sum(axis=0)
    dh = np.zeros_like(cache.hidden)
    dh[:, 0, :] = ds_unique @ params["proj_w"].T
    _encoder_stack_backward(params, grads, cfg, cache.ids, cache.mask,
                            cache.layer_caches, dh)


def encode_mean(
    params: dict, cfg: EncoderConfig, sequences: Sequence[Sequence[int]]
) -> tuple[np.ndarray, EncodeCache]:
    """Mean of the contextual token vectors (no [CLS], no projection)."""
    unique, gather = _dedupe(sequences)
    ids, mask = pad_batch(unique, prepend_cls=False,
                          max_tokens=cfg.max_tokens_per_sentence)
    hidden, layer_caches = _encoder_stack_forward(params, cfg, ids, mask)
    counts = mask.sum(axis=1)
    mean = (hidden * mask[..., None]).sum(axis=1) / counts[:, None]
    cache = EncodeCache(ids=ids, mask=mask, layer_caches=layer_caches,
                        hidden=hidden, gather=gather, mode="mean",
                        valid_counts=counts)
    return mean[gather], cache


def encode_mean_backward(params, grads, cfg, cache: EncodeCache, dm: np.ndarray) -> None:
    dm_unique = np.zeros((cache.hidden.shape[0], dm.shape[1]), dtype=np.float64)
    np.add.at(dm_unique, cache.gather, dm)
    dh = (dm_unique[:, None, :] / cache.valid_counts[:, None, None]) * cache.mask[..., None]
    _encoder_stack_backward(params, grads, cfg, cache.ids, cache.mask,
                            cache.layer_caches, dh)
