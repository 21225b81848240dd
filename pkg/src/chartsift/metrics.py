"""Ranking metrics: percentile thresholds, ROC/PR, NDCG, top-k P/R/F1.

All retrieval metrics operate on sentence *fingerprints* (lowercased,
whitespace-collapsed text), deduplicated per instance.  Curve metrics pool
every unique sentence of every (instance, query) pair into one binary
classification problem; NDCG is macro-averaged per query.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .lexical import fingerprint

ORACLE = "oracle"
ANNOTATION = "annotation"


def percentiles(texts: Sequence[str], scores: Sequence[float]) -> list[float]:
    """Fraction of unique sentences ranked strictly above each sentence.

    Sentences are deduplicated by fingerprint (duplicates share the highest
    score among them and inherit one percentile).  Values lie in [0, 1).
    """
    if not texts:
        raise ValueError("percentiles need at least one sentence")
    if len(texts) != len(scores):
        raise ValueError("texts and scores must align")
    fps = [fingerprint(t) for t in texts]
    best: dict[str, float] = {}
    for fp, sc in zip(fps, scores):
        if fp not in best or sc > best[fp]:
            best[fp] = sc
    n = len(best)
    values = sorted(best.values(), reverse=True)
    pct_of = {}
    for fp, sc in best.items():
        above = sum(1 for v in values if v > sc)
        pct_of[fp] = above / n
    return [pct_of[fp] for fp in fps]


@dataclass(frozen=True)
class SentenceScore:
    fingerprint: str
    score: float
    percentile: float


@dataclass
class RankedResult:
    """Unique-sentence scores for one (instance, query) pair."""

    instance_key: tuple
    query_key: str
    entries: list[SentenceScore]

    def ranked_fingerprints(self) -> list[str]:
        order = sorted(range(len(self.entries)),
                       key=lambda i: (-self.entries[i].score, i))
        return [self.entries[i].fingerprint for i in order]

    def fingerprints(self) -> set[str]:
        return {e.fingerprint for e in self.entries}


def make_ranked_result(
    instance_key: tuple, query_key: str,
    texts: Sequence[str], scores: Sequence[float],
) -> RankedResult:
    """Deduplicate raw per-sentence scores into a RankedResult."""
    pcts = percentiles(texts, scores)
    entries: list[SentenceScore] = []
    seen: dict[str, int] = {}
    for text, score, pct in zip(texts, scores, pcts):
        fp = fingerprint(text)
        if fp in seen:
            idx = seen[fp]
            if score > entries[idx].score:
                entries[idx] = SentenceScore(fp, score, pct)
            continue
        seen[fp] = len(entries)
        entries.append(SentenceScore(fp, score, pct))
    return RankedResult(instance_key, query_key, entries)


@dataclass
class ReferenceSummary:
    """Relevant-sentence sets per (instance, query) pair."""

    entries: dict[tuple, set[str]] = field(default_factory=dict)
    source: str = ORACLE

    def for_result(self, result: RankedResult) -> set[str]:
        key = (result.instance_key, result.query_key)
        if key not in self.entries:
            raise KeyError(f"no reference entry for {key!r}")
        return self.entries[key]


@dataclass
class CurveReport:
    thresholds: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    auroc: float
    average_precision: float
    n_pos: int
    n_neg: int

    def rows(self) -> list[tuple[float, float, float, float, float]]:
        return [
            (float(t), float(tp), float(fp), float(pr), float(rc))
            for t, tp, fp, pr, rc in zip(self.thresholds, self.tpr[1:],
                                         self.fpr[1:], self.precision,
                                         self.recall)
        ]


def binary_curves(scores: Sequence[float], labels: Sequence[int]) -> CurveReport:
    """ROC and PR curves over the distinct score thresholds.

    At each distinct score s the classifier predicts positive iff
    score >= s; ties are grouped so the curves match brute-force threshold
    enumeration exactly.  AUROC is the trapezoid area; average precision is
    the step sum over increasing recall.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape or scores.ndim != 1 or len(scores) == 0:
        raise ValueError("scores and labels must be equal-length 1-d arrays")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    tp_cum = np.cumsum(y)
    fp_cum = np.cumsum(1 - y)
    last_of_group = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1]
    thresholds = s[last_of_group]
    tp = tp_cum[last_of_group].astype(np.float64)
    fp = fp_cum[last_of_group].astype(np.float64)

    n_pos = int(labels.sum())
    n_neg = int(len(labels) - n_pos)
    if n_pos and n_neg:
        tpr = np.r_[0.0, tp / n_pos]
        fpr = np.r_[0.0, fp / n_neg]
        auroc = float(np.trapezoid(tpr, fpr))
    else:
        tpr = np.r_[0.0, tp / max(n_pos, 1)]
        fpr = np.r_[0.0, fp / max(n_neg, 1)]
        auroc = float("nan")
    precision = tp / np.maximum(tp + fp, 1.0)
    if n_pos:
        recall = tp / n_pos
        ap = float(np.sum(np.diff(np.r_[0.0, recall]) * precision))
    else:
        recall = tp * 0.0
        ap = float("nan")
    return CurveReport(thresholds=thresholds, tpr=tpr, fpr=fpr,
                       precision=precision, recall=recall, auroc=auroc,
                       average_precision=ap, n_pos=n_pos, n_neg=n_neg)


def pooled_examples(
    results: Sequence[RankedResult],
    references: ReferenceSummary,
    threshold_source: str = "percentile",
) -> tuple[list[float], list[int]]:
    """One (score, label) example per unique sentence per (instance, query)."""
    if threshold_source not in ("percentile", "attention"):
        raise ValueError(f"unknown threshold source {threshold_source!r}")
    scores: list[float] = []
    labels: list[int] = []
    for result in results:
        ref = references.for_result(result)
        present = result.fingerprints()
        missing = ref - present
        if missing:
            raise ValueError(
                f"reference sentences absent from instance "
                f"{result.instance_key}/{result.query_key}: {sorted(missing)[:3]}")
        for entry in result.entries:
            if threshold_source == "percentile":
                scores.append(1.0 - entry.percentile)
            else:
                scores.append(entry.score)
            labels.append(1 if entry.fingerprint in ref else 0)
    return scores, labels


def retrieval_curves(
    results: Sequence[RankedResult],
    references: ReferenceSummary,
    threshold_source: str = "percentile",
) -> CurveReport:
    scores, labels = pooled_examples(results, references, threshold_source)
    return binary_curves(scores, labels)


def ndcg(ranked_fingerprints: Sequence[str], relevant: set[str]) -> float:
    """Binary-gain NDCG with log2(rank+1) discount over the full ranking."""
    if not relevant:
        raise ValueError("NDCG is undefined for an empty relevant set")
    dcg = sum(1.0 / math.log2(k + 1)
              for k, fp in enumerate(ranked_fingerprints, start=1)
              if fp in relevant)
    idcg = sum(1.0 / math.log2(k + 1) for k in range(1, len(relevant) + 1))
    return dcg / idcg


def mean_ndcg(
    results: Sequence[RankedResult], references: ReferenceSummary
) -> float:
    """Macro-mean NDCG over queries; empty-reference queries are excluded."""
    values = []
    for result in results:
        ref = references.for_result(result)
        if not ref:
            continue
        values.append(ndcg(result.ranked_fingerprints(), ref))
    return float(np.mean(values)) if values else float("nan")


@dataclass
class PrfReport:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int


def topk_prf(
    results: Sequence[RankedResult],
    references: ReferenceSummary,
    k: int = 20,
) -> PrfReport:
    """Micro precision/recall/F1 over the top-k unique sentences per query."""
    tp = fp = fn = 0
    for result in results:
        ref = references.for_result(result)
        retrieved = set(result.ranked_fingerprints()[:k])
        tp += len(retrieved & ref)
        fp += len(retrieved - ref)
        fn += len(ref - retrieved)
    precision = tp / (tp + fp) if (tp + fp) else 0.0
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if (precision + recall) else 0.0)
    return PrfReport(precision, recall, f1, tp, fp, fn)


def validated_precision(records: Iterable[Mapping], k: int = 20) -> float:
    """Fraction of reviewed sentences marked relevant.

    Records need ``relevant`` plus the grouping fields (annotator, patient,
    time point, query); at most the first ``k`` records per group count,
    matching the top-k review protocol.
    """
    reviewed = 0
    relevant = 0
    per_group: dict[tuple, int] = {}
    for rec in records:
        group = (rec.get("annotator"), rec.get("patient_id"),
                 rec.get("time_point"), rec.get("query"))
        seen = per_group.get(group, 0)
        if seen >= k:
            continue
        per_group[group] = seen + 1
        reviewed += 1
        relevant += 1 if rec["relevant"] else 0
    return relevant / reviewed if reviewed else 0.0


def is_custom_query(query_key: str) -> bool:
    return isinstance(query_key, str) and query_key.startswith("custom:")


def subset_filters(
    results: Sequence[RankedResult],
    references: ReferenceSummary,
    mode: str,
    hierarchy=None,
    tfidf_model=None,
    descriptions: Optional[Mapping[str, str]] = None,
    depth: Optional[int] = None,
) -> tuple[list[RankedResult], ReferenceSummary]:
    """Restrict (results, references) to an analysis subset.

    ``tfidf_zero`` removes reference sentences that have nonzero TF-IDF
    similarity to the query description from both sides of each pair, so
    only lexically subtle evidence remains relevant.  ``depth`` keeps
    queries at one hierarchy depth; ``custom_only`` keeps runtime custom
    queries.
    """
    if mode == "tfidf_zero":
        if tfidf_model is None or descriptions is None:
            raise ValueError("tfidf_zero needs a tfidf model and descriptions")
        new_results = []
        new_refs = ReferenceSummary(source=references.source)
        from .lexical import cosine  # local to avoid polluting module surface

        for result in results:
            ref = references.for_result(result)
            desc_vec = tfidf_model.vector(descriptions[result.query_key])
            overlapping = {
                fp for fp in ref
                if cosine(tfidf_model.vector(fp), desc_vec) != 0.0
            }
            entries = [e for e in result.entries if e.fingerprint not in overlapping]
            if not entries:
                continue
            new_results.append(RankedResult(result.instance_key,
                                            result.query_key, entries))
            new_refs.entries[(result.instance_key, result.query_key)] = (
                ref - overlapping)
        return new_results, new_refs

    if mode == "depth":
        if hierarchy is None or depth is None:
            raise ValueError("depth filter needs a hierarchy and a depth")
        keep = [r for r in results
                if not is_custom_query(r.query_key)
                and hierarchy.node(r.query_key).depth == depth]
    elif mode == "custom_only":
        keep = [r for r in results if is_custom_query(r.query_key)]
    else:
        raise ValueError(f"unknown subset mode {mode!r}")
    new_refs = ReferenceSummary(
        entries={(r.instance_key, r.query_key): references.for_result(r)
                 for r in keep},
        source=references.source)
    return list(keep), new_refs


def code_prediction_metrics(
    probabilities: Sequence[float], labels: Sequence[int]
) -> CurveReport:
    """ROC/PR for future-code prediction, pooled over (instance, category)."""
    return binary_curves(probabilities, labels)


@dataclass
class AgreementReport:
    query_overlap: int
    query_only_a: int
    query_only_b: int
    custom_a: int
    custom_b: int
    sentence_overlap: int
    sentence_only_a: int
    sentence_only_b: int


def annotator_agreement(
    records_a: Iterable[Mapping], records_b: Iterable[Mapping]
) -> AgreementReport:
    """Overlap counts between two annotators' reference-round tags."""

    def collect(records):
        queries = set()
        customs = set()
        sentences = set()
        for rec in records:
            if not rec.get("relevant", True):
                continue
            key = (rec["patient_id"], rec["time_point"], rec["query"])
            if is_custom_query(rec["query"]):
                customs.add(key)
            else:
                queries.add(key)
                sentences.add(key + (rec["fingerprint"],))
        return queries, customs, sentences

    qa, ca, sa = collect(records_a)
    qb, cb, sb = collect(records_b)
    overlapping_queries = qa & qb
    sa_overlap = {s for s in sa if s[:3] in overlapping_queries}
    sb_overlap = {s for s in sb if s[:3] in overlapping_queries}
    return AgreementReport(
        query_overlap=len(overlapping_queries),
        query_only_a=len(qa - qb),
        query_only_b=len(qb - qa),
        custom_a=len(ca),
        custom_b=len(cb),
        sentence_overlap=len(sa_overlap & sb_overlap),
        sentence_only_a=len(sa_overlap - sb_overlap),
        sentence_only_b=len(sb_overlap - sa_overlap),
    )
