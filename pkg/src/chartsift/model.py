"""Query-conditioned sentence ranking: embeddings, attention pointer, head.

A query can be an indicator row, the category's description, the
concatenated root-to-category description path, or free text.  Text-style
queries run through the same encoder (and the same projection) as report
sentences.  The attention distribution over sentence embeddings doubles as
the relevance score vector; the prediction head turns the attention-pooled
context plus the query embedding into a future-code probability.
"""

from __future__ import annotations

import base64
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .encoder import (
    EncoderConfig,
    encode_cls,
    encode_mean,
    init_params,
)
from .hierarchy import DiagnosisHierarchy
from .lexical import SEP_ID, UNK_ID, Vocabulary, cosine
from .metrics import percentiles

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "chartsift-checkpoint"
CHECKPOINT_VERSION = 1

INDICATOR = "indicator"
DESCRIPTION = "description"
HIERARCHY = "hierarchy"
FREE_TEXT = "free_text"
QUERY_MODES = (INDICATOR, DESCRIPTION, HIERARCHY, FREE_TEXT)


@dataclass(frozen=True)
class QuerySpec:
    mode: str
    category_id: Optional[str] = None
    text: Optional[str] = None

    def __post_init__(self):
        mode = {"hierarchy_path": HIERARCHY}.get(self.mode, self.mode)
        object.__setattr__(self, "mode", mode)
        if mode not in QUERY_MODES:
            raise ValueError(f"unknown query mode {self.mode!r}")
        if mode == FREE_TEXT:
            if not self.text:
                raise ValueError("free_text query needs text")
        elif not self.category_id:
            raise ValueError(f"{mode} query needs a category id")


def sentence_token_ids(
    texts: Sequence[str], vocab: Vocabulary, cfg: EncoderConfig
) -> list[list[int]]:
    """Token ids per sentence; a sentence with no tokens becomes [UNK]."""
    out = []
    for text in texts:
        ids = vocab.encode(text, max_tokens=cfg.max_tokens_per_sentence)
        out.append(ids if ids else [UNK_ID])
    return out


def query_token_ids(
    spec: QuerySpec,
    hierarchy: Optional[DiagnosisHierarchy],
    vocab: Vocabulary,
    cfg: EncoderConfig,
    custom_descriptions: Optional[dict[str, str]] = None,
) -> list[int]:
    """Token sequence for a text-style query (description/hierarchy/free text)."""
    if spec.mode == INDICATOR:
        raise ValueError("indicator queries have no token sequence")
    if spec.mode == FREE_TEXT:
        ids = vocab.encode(spec.text)
    else:
        custom_descriptions = custom_descriptions or {}
        if spec.category_id in custom_descriptions:
            # Runtime categories have no tree position: both text modes fall
            # back to their bare description.
            ids = vocab.encode(custom_descriptions[spec.category_id])
        else:
            if hierarchy is None:
                raise ValueError("category query requires a hierarchy")
            if spec.mode == DESCRIPTION:
                node = hierarchy.node(spec.category_id)
                ids = vocab.encode(node.description or node.name)
            else:
                ids = []
                for i, node_id in enumerate(hierarchy.path_to(spec.category_id)):
                    node = hierarchy.node(node_id)
                    if i:
                        ids.append(SEP_ID)
                    ids.extend(vocab.encode(node.description or node.name))
    ids = ids[: cfg.max_tokens_per_sentence]
    return ids if ids else [UNK_ID]


def attend(s: np.ndarray, e_q: np.ndarray) -> tuple[np.ndarray, tuple]:
    """Softmax over sentence-embedding/query dot products (max-subtracted)."""
    if s.shape[0] < 1:
        raise ValueError("attention needs at least one sentence")
    logits = s @ e_q
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    a = exp / exp.sum()
    return a, (s, e_q, a)


def attend_backward(cache: tuple, da: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s, e_q, a = cache
    dlogits = (da - float(da @ a)) * a
    ds = np.outer(dlogits, e_q)
    de = s.T @ dlogits
    return ds, de


def predict(params: dict, s: np.ndarray, a: np.ndarray,
            e_q: np.ndarray) -> tuple[float, tuple]:
    """P(y=1 | x, q): two dense layers with ReLU between and a sigmoid on top
    of [attention-pooled context; query embedding]."""
    c = a @ s
    u = np.concatenate([c, e_q])
    h_pre = u @ params["head_w1"] + params["head_b1"]
    h = np.maximum(h_pre, 0.0)
    o = float(h @ params["head_w2"] + params["head_b2"])
    p = 1.0 / (1.0 + math.exp(-o))
    return p, (s, a, e_q, c, u, h_pre, h, o, p)


def predict_backward(
    params: dict, grads: dict, cache: tuple, do: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Backward from d(loss)/d(logit); returns (ds, da, de_q)."""
    s, a, e_q, c, u, h_pre, h, o, p = cache
    grads["head_w2"] += h * do
    grads["head_b2"] += do
    dh = params["head_w2"] * do
    dh_pre = dh * (h_pre > 0)
    grads["head_w1"] += np.outer(u, dh_pre)
    grads["head_b1"] += dh_pre
    du = params["head_w1"] @ dh_pre
    d_hidden = e_q.shape[0]
    dc, de = du[:d_hidden], du[d_hidden:]
    da = s @ dc
    ds = np.outer(a, dc)
    return ds, da, de


def sigmoid_backward(p: float, dp: float) -> float:
    return dp * p * (1.0 - p)


@dataclass
class RelevanceRanking:
    """Per-sentence relevance scores with ranking metadata.

    ``scores`` aligns with ``kept_indices`` into the caller's sentence
    list; ``order`` ranks kept sentences by score descending, earliest
    position first on ties.
    """

    scores: list[float]
    order: list[int]
    percentiles: list[float]
    kept_indices: list[int]
    probability: Optional[float] = None


def ranking_order(scores: Sequence[float]) -> list[int]:
    return list(np.argsort(-np.asarray(scores), kind="stable"))


@dataclass
class ModelBundle:
    """Everything needed to score instances: config, weights, vocab, categories."""

    cfg: EncoderConfig
    params: dict[str, np.ndarray]
    category_ids: list[str]
    vocab: Vocabulary
    query_mode: str = DESCRIPTION
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self._category_row = {c: i for i, c in enumerate(self.category_ids)}

    def category_row(self, category_id: str) -> int:
        try:
            return self._category_row[category_id]
        except KeyError:
            raise KeyError(f"category {category_id!r} has no indicator row") from None

    def embed_query(
        self,
        spec: QuerySpec,
        hierarchy: Optional[DiagnosisHierarchy],
        custom_descriptions: Optional[dict[str, str]] = None,
    ) -> np.ndarray:
        if spec.mode == INDICATOR:
            if spec.category_id in (custom_descriptions or {}):
                raise ValueError("indicator mode cannot embed custom categories")
            return self.params["indicator"][self.category_row(spec.category_id)]
        ids = query_token_ids(spec, hierarchy, self.vocab, self.cfg,
                              custom_descriptions)
        e, _ = encode_cls(self.params, self.cfg, [ids])
        return e[0]

    def score_instance(
        self,
        sentence_texts: Sequence[str],
        spec: QuerySpec,
        hierarchy: Optional[DiagnosisHierarchy],
        custom_descriptions: Optional[dict[str, str]] = None,
    ) -> RelevanceRanking:
        kept = list(range(len(sentence_texts)))
        cap = self.cfg.max_sentences_per_instance
        if len(kept) > cap:
            logger.warning("instance has %d sentences; keeping the most recent %d",
                           len(kept), cap)
            kept = kept[-cap:]
        texts = [sentence_texts[i] for i in kept]
        if not texts:
            raise ValueError("cannot rank an empty sentence list")
        ids = sentence_token_ids(texts, self.vocab, self.cfg)
        s, _ = encode_cls(self.params, self.cfg, ids)
        e_q = self.embed_query(spec, hierarchy, custom_descriptions)
        a, _ = attend(s, e_q)
        prob, _ = predict(self.params, s, a, e_q)
        scores = [float(x) for x in a]
        return RelevanceRanking(
            scores=scores,
            order=ranking_order(scores),
            percentiles=percentiles(texts, scores),
            kept_indices=kept,
            probability=prob,
        )

    def save(self, path: str | Path) -> None:
        header = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "config": self.cfg.to_json(),
            "query_mode": self.query_mode,
            "category_ids": self.category_ids,
            "vocab_tokens": [t for t, _ in sorted(self.vocab.token_to_id.items(),
                                                  key=lambda kv: kv[1])],
            "extra": self.extra,
        }
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header) + "\n")
            for name in sorted(self.params):
                tensor = np.asarray(self.params[name], dtype="<f8", order="C")
                fh.write(json.dumps({
                    "name": name,
                    "shape": list(tensor.shape),
                    "data": base64.b64encode(tensor.tobytes()).decode("ascii"),
                }) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ModelBundle":
        with open(path, "r", encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            if header.get("format") != CHECKPOINT_FORMAT:
                raise ValueError(f"{path}: not a checkpoint file")
            if header.get("version", 0) > CHECKPOINT_VERSION:
                raise ValueError(f"{path}: unsupported checkpoint version")
            params: dict[str, np.ndarray] = {}
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                buf = base64.b64decode(rec["data"])
                params[rec["name"]] = np.frombuffer(buf, dtype="<f8").reshape(
                    rec["shape"]).copy()
        vocab = Vocabulary({t: i for i, t in enumerate(header["vocab_tokens"])})
        return cls(
            cfg=EncoderConfig.from_json(header["config"]),
            params=params,
            category_ids=list(header["category_ids"]),
            vocab=vocab,
            query_mode=header.get("query_mode", DESCRIPTION),
            extra=header.get("extra", {}),
        )


def new_bundle(
    cfg: EncoderConfig,
    category_ids: Sequence[str],
    vocab: Vocabulary,
    query_mode: str,
    seed: int,
) -> ModelBundle:
    params = init_params(cfg, n_categories=len(category_ids), seed=seed)
    return ModelBundle(cfg=cfg, params=params, category_ids=list(category_ids),
                       vocab=vocab, query_mode=query_mode)


def tfidf_scores(sentence_texts: Sequence[str], description: str,
                 tfidf_model) -> list[float]:
    """Cosine of TF-IDF vectors against the query description, per sentence."""
    d_vec = tfidf_model.vector(description)
    return [cosine(tfidf_model.vector(text), d_vec) for text in sentence_texts]


def contextual_scores(
    bundle: ModelBundle, sentence_texts: Sequence[str], description: str
) -> list[float]:
    """Cosine of mean-pooled contextual embeddings against the description."""
    ids = sentence_token_ids(list(sentence_texts) + [description],
                             bundle.vocab, bundle.cfg)
    vecs, _ = encode_mean(bundle.params, bundle.cfg, ids)
    d_vec = vecs[-1]
    return [cosine(vecs[i], d_vec) for i in range(len(sentence_texts))]
