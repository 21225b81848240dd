"""Distantly supervised training: rebalanced BCE over future-code labels.

Class imbalance is handled two ways, composed per batch.  First, the loss
on negatively labeled queries is weighted by the batch's negative/positive
count ratio.  Second, each instance's negative categories are resampled:
``n ~ Binomial(#negatives, p)`` draws (with replacement) from the
instance's own negatives, weighted by how often a category is positive in
the training data relative to how often it is negative, so the sampled
negatives match the positive category distribution.

Everything is deterministic given the seed: shuffling and resampling use
dedicated seeded streams, and resampling is redrawn each epoch.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .encoder import EncoderConfig, zeros_like_params
from .extraction import TrainingInstance
from .hierarchy import DiagnosisHierarchy
from .lexical import Vocabulary
from .model import (
    DESCRIPTION,
    INDICATOR,
    ModelBundle,
    QuerySpec,
    attend,
    attend_backward,
    new_bundle,
    predict,
    predict_backward,
    query_token_ids,
    sentence_token_ids,
)
from .encoder import encode_cls, encode_cls_backward

logger = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    """Non-finite loss or an otherwise unrecoverable training failure."""


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 5
    batch_size: int = 4
    seed: int = 0
    downsample_p: float = 0.01
    query_mode: str = DESCRIPTION
    max_grad_norm: Optional[float] = 1.0
    prob_clamp: float = 1e-7

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < self.downsample_p <= 1.0:
            raise ValueError("downsample_p must be in (0, 1]")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("invalid epochs/batch_size")


@dataclass
class CategoryStats:
    pos: dict[str, int] = field(default_factory=dict)
    neg: dict[str, int] = field(default_factory=dict)

    @property
    def total_pos(self) -> int:
        return sum(self.pos.values())

    def pos_count(self, category: str) -> int:
        return self.pos.get(category, 0)

    def neg_count(self, category: str) -> int:
        return self.neg.get(category, 0)


def compute_category_stats(instances: Sequence[TrainingInstance]) -> CategoryStats:
    """Positive/negative occurrence counts per category over the train set."""
    if not instances:
        raise ValueError("cannot compute stats on an empty training set")
    stats = CategoryStats()
    for inst in instances:
        for cat, y in zip(inst.queries, inst.labels):
            if y == 1:
                stats.pos[cat] = stats.pos.get(cat, 0) + 1
            else:
                stats.neg[cat] = stats.neg.get(cat, 0) + 1
    return stats


def negative_sampling_weights(
    negatives: Sequence[str], stats: CategoryStats
) -> np.ndarray:
    """Unnormalized draw weights: (pos_c / total_pos) / neg_c, zero-guarded."""
    total_pos = stats.total_pos
    weights = np.zeros(len(negatives), dtype=np.float64)
    if total_pos == 0:
        return weights
    for i, cat in enumerate(negatives):
        pos_c = stats.pos_count(cat)
        neg_c = stats.neg_count(cat)
        if pos_c > 0 and neg_c > 0:
            weights[i] = (pos_c / total_pos) * (1.0 / neg_c)
    return weights


def resample_negatives(
    instance: TrainingInstance,
    stats: CategoryStats,
    p: float,
    rng: np.random.Generator,
) -> list[str]:
    """Replacement negative query list: Binomial(#negatives, p) weighted draws."""
    negatives = instance.negatives()
    if not negatives:
        return []
    n = int(rng.binomial(len(negatives), p))
    if n == 0:
        return []
    weights = negative_sampling_weights(negatives, stats)
    total = weights.sum()
    if total == 0.0:
        return []
    picks = rng.choice(len(negatives), size=n, replace=True, p=weights / total)
    return [negatives[int(i)] for i in picks]


# A batch entry pairs an instance with its post-resampling query list.
BatchEntry = tuple[TrainingInstance, list[tuple[str, int]]]


def resampled_queries(
    instance: TrainingInstance,
    stats: CategoryStats,
    p: float,
    rng: np.random.Generator,
) -> list[tuple[str, int]]:
    queries = [(cat, 1) for cat in instance.positives()]
    queries += [(cat, 0) for cat in resample_negatives(instance, stats, p, rng)]
    return queries


@dataclass
class BatchInfo:
    w_b: float
    pos_count: int
    neg_count: int


def batch_loss_and_grads(
    batch: Sequence[BatchEntry],
    bundle: ModelBundle,
    hierarchy: Optional[DiagnosisHierarchy],
    prob_clamp: float = 1e-7,
    want_grads: bool = True,
) -> tuple[float, Optional[dict], BatchInfo]:
    """Rebalanced BCE over a batch, with analytic parameter gradients.

    Per query: BCE on the clamped probability, negative terms weighted by
    w_b = neg_b / pos_b (batch counts after resampling; 1 when pos_b = 0).
    Per instance: mean over its queries.  Batch: mean over instances.
    """
    params, cfg, vocab = bundle.params, bundle.cfg, bundle.vocab
    mode = bundle.query_mode
    pos_b = sum(1 for _, qs in batch for _, y in qs if y == 1)
    neg_b = sum(1 for _, qs in batch for _, y in qs if y == 0)
    if pos_b + neg_b == 0:
        raise ValueError("batch has no queries")
    for inst, qs in batch:
        if not qs:
            raise ValueError(f"instance {inst.key()} has no queries after resampling")
    w_b = (neg_b / pos_b) if pos_b > 0 else 1.0

    grads = zeros_like_params(params) if want_grads else None

    # One encoder pass for all text-style query token sequences in the batch.
    text_query_ids: list[list[int]] = []
    prepared = []
    for inst, qs in batch:
        texts = [s.text for s in inst.sentences]
        texts = texts[-cfg.max_sentences_per_instance:]
        sent_ids = sentence_token_ids(texts, vocab, cfg)
        refs = []
        for cat, y in qs:
            if mode == INDICATOR:
                refs.append(("row", bundle.category_row(cat)))
            else:
                qids = query_token_ids(QuerySpec(mode, category_id=cat),
                                       hierarchy, vocab, cfg)
                refs.append(("txt", len(text_query_ids)))
                text_query_ids.append(qids)
        prepared.append((sent_ids, qs, refs))

    e_all = None
    query_cache = None
    de_all = None
    if text_query_ids:
        e_all, query_cache = encode_cls(params, cfg, text_query_ids)
        de_all = np.zeros_like(e_all)

    total = 0.0
    for sent_ids, qs, refs in prepared:
        s, sent_cache = encode_cls(params, cfg, sent_ids)
        ds = np.zeros_like(s)
        inst_loss = 0.0
        for (cat, y), (kind, idx) in zip(qs, refs):
            e_q = params["indicator"][idx] if kind == "row" else e_all[idx]
            a, a_cache = attend(s, e_q)
            prob, p_cache = predict(params, s, a, e_q)
            clamped = min(max(prob, prob_clamp), 1.0 - prob_clamp)
            term = -(y * math.log(clamped) + (1 - y) * math.log(1.0 - clamped))
            weight = 1.0 if y == 1 else w_b
            inst_loss += weight * term
            if want_grads:
                coeff = weight / (len(qs) * len(batch))
                if prob_clamp < prob < 1.0 - prob_clamp:
                    dprob = -(y / clamped - (1 - y) / (1.0 - clamped))
                else:
                    dprob = 0.0
                do = coeff * dprob * prob * (1.0 - prob)
                ds_pred, da, de_pred = predict_backward(params, grads, p_cache, do)
                ds_att, de_att = attend_backward(a_cache, da)
                ds += ds_pred + ds_att
                de_q = de_pred + de_att
                if kind == "row":
                    grads["indicator"][idx] += de_q
                else:
                    de_all[idx] += de_q
        total += inst_loss / len(qs)
        if want_grads:
            encode_cls_backward(params, grads, cfg, sent_cache, ds)
    if want_grads and text_query_ids:
        encode_cls_backward(params, grads, cfg, query_cache, de_all)

    loss = total / len(batch)
    return loss, grads, BatchInfo(w_b=w_b, pos_count=pos_b, neg_count=neg_b)


def batch_loss(
    batch: Sequence[BatchEntry],
    bundle: ModelBundle,
    hierarchy: Optional[DiagnosisHierarchy],
    prob_clamp: float = 1e-7,
) -> float:
    loss, _, _ = batch_loss_and_grads(batch, bundle, hierarchy,
                                      prob_clamp=prob_clamp, want_grads=False)
    return loss


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale gradients in place to a global L2 norm cap; returns the raw norm."""
    total = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if max_norm and total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls(m=zeros_like_params(params), v=zeros_like_params(params))


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    config: TrainConfig,
) -> None:
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    bias1 = 1.0 - b1 ** state.t
    bias2 = 1.0 - b2 ** state.t
    for name, g in grads.items():
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * (g * g)
        params[name] -= config.learning_rate * (m / bias1) / (
            np.sqrt(v / bias2) + config.adam_eps)


@dataclass
class LossRecord:
    epoch: int
    step: int
    loss: float
    w_b: float
    n_sampled_negatives: int


def save_loss_log(records: Iterable[LossRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch\tstep\tloss\tw_b\tn_sampled_negatives\n")
        for r in records:
            fh.write(f"{r.epoch}\t{r.step}\t{r.loss!r}\t{r.w_b!r}\t"
                     f"{r.n_sampled_negatives}\n")


def build_vocabulary(
    instances: Sequence[TrainingInstance],
    hierarchy: DiagnosisHierarchy,
    max_size: Optional[int] = None,
    min_frequency: int = 1,
) -> Vocabulary:
    """Vocabulary over training sentences plus all category descriptions.

    Descriptions are query-side training inputs, so including them leaks
    nothing from held-out patients.
    """
    texts = [s.text for inst in instances for s in inst.sentences]
    texts += [node.description or node.name for node in hierarchy.nodes.values()]
    return Vocabulary.build(texts, max_size=max_size, min_frequency=min_frequency)


def train(
    instances: Sequence[TrainingInstance],
    hierarchy: DiagnosisHierarchy,
    encoder_cfg: EncoderConfig,
    config: TrainConfig,
    vocab: Optional[Vocabulary] = None,
    checkpoint_dir: Optional[str | Path] = None,
) -> tuple[ModelBundle, list[LossRecord]]:
    """Train a model; deterministic in config.seed.

    Emits one checkpoint per epoch into ``checkpoint_dir`` when given.
    Inputs with a non-finite loss abort with diagnostics.
    """
    config.validate()
    if not instances:
        raise ValueError("no training instances")
    if vocab is None:
        vocab = build_vocabulary(instances, hierarchy)
    if encoder_cfg.vocab_size != len(vocab):
        raise ValueError(
            f"encoder vocab_size {encoder_cfg.vocab_size} != |vocab| {len(vocab)}")
    bundle = new_bundle(encoder_cfg, list(hierarchy.nodes), vocab,
                        query_mode=config.query_mode, seed=config.seed)
    stats = compute_category_stats(instances)
    rng_shuffle = np.random.default_rng([config.seed, 1])
    rng_resample = np.random.default_rng([config.seed, 2])
    adam = AdamState.for_params(bundle.params)
    log: list[LossRecord] = []
    checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None

    for epoch in range(config.epochs):
        order = rng_shuffle.permutation(len(instances))
        step = 0
        for start in range(0, len(order), config.batch_size):
            chunk = order[start: start + config.batch_size]
            batch: list[BatchEntry] = []
            n_sampled = 0
            for i in chunk:
                inst = instances[int(i)]
                qs = resampled_queries(inst, stats, config.downsample_p,
                                       rng_resample)
                n_sampled += sum(1 for _, y in qs if y == 0)
                batch.append((inst, qs))
            loss, grads, info = batch_loss_and_grads(
                batch, bundle, hierarchy, prob_clamp=config.prob_clamp)
            if not math.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss {loss} at epoch {epoch} step {step} "
                    f"(batch {[inst.key() for inst, _ in batch]})")
            if config.max_grad_norm:
                clip_gradients(grads, config.max_grad_norm)
            adam_step(bundle.params, grads, adam, config)
            log.append(LossRecord(epoch, step, loss, info.w_b, n_sampled))
            step += 1
        if checkpoint_dir is not None:
            checkpoint_dir.mkdir(parents=True, exist_ok=True)
            bundle.save(checkpoint_dir / f"epoch-{epoch + 1:03d}.ckpt")
    return bundle, log


def gradient_check(
    bundle: ModelBundle,
    batch: Sequence[BatchEntry],
    hierarchy: Optional[DiagnosisHierarchy],
    eps: float = 1e-4,
    grad_transform: Optional[Callable[[dict], dict]] = None,
) -> float:
    """Max relative error between analytic gradients and central differences.

    Sweeps every element of every parameter tensor, so keep fixtures at
    d_model <= 8.  Relative error uses a 1e-4 magnitude floor: gradients
    below the difference-noise level cannot be resolved by the oracle and
    are compared absolutely at that scale.  ``grad_transform`` lets tests
    corrupt the analytic gradients to prove the check has teeth.
    """
    _, grads, _ = batch_loss_and_grads(batch, bundle, hierarchy)
    if grad_transform is not None:
        grads = grad_transform(grads)
    worst = 0.0
    for name, tensor in bundle.params.items():
        for idx in np.ndindex(*tensor.shape):
            original = tensor[idx]
            tensor[idx] = original + eps
            lp = batch_loss(batch, bundle, hierarchy)
            tensor[idx] = original - eps
            lm = batch_loss(batch, bundle, hierarchy)
            tensor[idx] = original
            numeric = (lp - lm) / (2 * eps)
            analytic = float(grads[name][idx])
            scale = max(abs(numeric), abs(analytic), 1e-4)
            worst = max(worst, abs(numeric - analytic) / scale)
    return worst
