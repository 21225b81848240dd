"""Training-instance extraction: persistent codes, time-points, and splits.

An instance is anchored at a radiology report that falls within ``window``
days before the first occurrence of a persistent leaf code.  Its input is
every sentence written strictly before that time-point; its positive
queries are persistent leaves that occur again strictly after it, its
negative queries are leaves the patient's codes never touch, and non-leaf
labels follow from label propagation.  No sentence after the time-point
and no label information ever flows into the inputs.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .corpus import Corpus, Sentence
from .hierarchy import CategoryLabel, DiagnosisHierarchy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InstanceSentence:
    text: str
    report_id: str


@dataclass
class TrainingInstance:
    patient_id: str
    t: int
    sentences: list[InstanceSentence]
    queries: list[str]
    labels: list[int]

    def key(self) -> tuple[str, int]:
        return (self.patient_id, self.t)

    def positives(self) -> list[str]:
        return [c for c, y in zip(self.queries, self.labels) if y == 1]

    def negatives(self) -> list[str]:
        return [c for c, y in zip(self.queries, self.labels) if y == 0]


@dataclass
class SplitSpec:
    ratios: tuple[float, float, float] = (0.7, 0.15, 0.15)
    caps: tuple[int, int, int] = (10_000, 1_000, 1_000)
    seed: int = 0

    def validate(self) -> None:
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError(f"split ratios must sum to 1, got {self.ratios}")
        if any(r < 0 for r in self.ratios):
            raise ValueError("split ratios must be nonnegative")
        if any(c < 0 for c in self.caps):
            raise ValueError("split caps must be nonnegative")


@dataclass
class ExtractionCounters:
    candidate_time_points: int = 0
    dropped_no_sentences: int = 0
    dropped_no_positives: int = 0
    instances: int = 0


def persistent_leaf_codes(
    patient, hierarchy: DiagnosisHierarchy
) -> dict[str, list[int]]:
    """Leaves with >= 2 mapped code events, each with its sorted timestamps.

    Distinct raw codes that map to the same leaf pool their occurrences.
    """
    times: dict[str, list[int]] = {}
    for event in patient.code_events:
        leaf = hierarchy.map_code(event.code, event.system)
        if leaf is not None:
            times.setdefault(leaf, []).append(event.timestamp)
    return {leaf: sorted(ts) for leaf, ts in times.items() if len(ts) >= 2}


def touched_leaves(patient, hierarchy: DiagnosisHierarchy) -> set[str]:
    """Leaves reached by at least one of the patient's code events."""
    out = set()
    for event in patient.code_events:
        leaf = hierarchy.map_code(event.code, event.system)
        if leaf is not None:
            out.add(leaf)
    return out


def build_instances(
    corpus: Corpus,
    hierarchy: DiagnosisHierarchy,
    window: int = 365,
    label_horizon: Optional[int] = None,
    counters: Optional[ExtractionCounters] = None,
) -> list[TrainingInstance]:
    """Build deduplicated (x, q, y) instances for every patient in the corpus."""
    counters = counters if counters is not None else ExtractionCounters()
    all_leaves = hierarchy.leaf_ids()
    node_order = {node_id: i for i, node_id in enumerate(hierarchy.nodes)}
    instances: list[TrainingInstance] = []

    for patient in corpus:
        persistent = persistent_leaf_codes(patient, hierarchy)
        if not persistent:
            continue
        touched = touched_leaves(patient, hierarchy)
        never_coded = [leaf for leaf in all_leaves if leaf not in touched]

        time_points: set[int] = set()
        for leaf_times in persistent.values():
            first = leaf_times[0]
            for report in patient.reports:
                if report.kind == "radiology" and first - window <= report.timestamp < first:
                    time_points.add(report.timestamp)
        counters.candidate_time_points += len(time_points)

        for t in sorted(time_points):
            sentences = corpus.sentences_before(patient.id, t)
            if not sentences:
                counters.dropped_no_sentences += 1
                continue
            horizon_end = None if label_horizon is None else t + label_horizon
            positives = [
                leaf for leaf, ts in persistent.items()
                if any(s > t and (horizon_end is None or s <= horizon_end) for s in ts)
            ]
            if not positives:
                counters.dropped_no_positives += 1
                continue
            leaf_labels = {leaf: CategoryLabel.POSITIVE for leaf in positives}
            for leaf in never_coded:
                leaf_labels[leaf] = CategoryLabel.NEGATIVE
            propagated = hierarchy.propagate_labels(leaf_labels)
            queries = [c for c in sorted(propagated, key=node_order.__getitem__)
                       if propagated[c] is not CategoryLabel.EXCLUDED]
            labels = [1 if propagated[c] is CategoryLabel.POSITIVE else 0
                      for c in queries]
            instances.append(TrainingInstance(
                patient_id=patient.id,
                t=t,
                sentences=[InstanceSentence(s.text, s.report_id) for s in sentences],
                queries=queries,
                labels=labels,
            ))
            counters.instances += 1

    instances.sort(key=lambda inst: inst.key())
    return instances


def split_patients(
    patient_ids: Iterable[str], spec: SplitSpec
) -> tuple[list[str], list[str], list[str]]:
    """Partition patients into train/val/test by largest-remainder rounding.

    Deterministic in the seed; remainder ties go to the later split.
    """
    spec.validate()
    ids = sorted(set(patient_ids))
    rng = np.random.default_rng(spec.seed)
    order = rng.permutation(len(ids))
    shuffled = [ids[i] for i in order]

    n = len(ids)
    exact = [r * n for r in spec.ratios]
    sizes = [int(x) for x in exact]
    remainders = [x - s for x, s in zip(exact, sizes)]
    for _ in range(n - sum(sizes)):
        pick = max(range(3), key=lambda i: (remainders[i], i))
        sizes[pick] += 1
        remainders[pick] = -1.0

    train = shuffled[: sizes[0]]
    val = shuffled[sizes[0]: sizes[0] + sizes[1]]
    test = shuffled[sizes[0] + sizes[1]:]
    return sorted(train), sorted(val), sorted(test)


def truncate_instances(
    instances: Sequence[TrainingInstance], cap: int, seed: int
) -> list[TrainingInstance]:
    """Uniform random truncation to at most ``cap`` instances, canonical order."""
    if len(instances) <= cap:
        return list(instances)
    rng = np.random.default_rng(seed)
    keep = rng.choice(len(instances), size=cap, replace=False)
    kept = [instances[i] for i in sorted(keep)]
    return kept


def save_instances(instances: Iterable[TrainingInstance], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps({
                "patient_id": inst.patient_id,
                "t": inst.t,
                "sentences": [{"text": s.text, "report_id": s.report_id}
                              for s in inst.sentences],
                "queries": inst.queries,
                "labels": inst.labels,
            }) + "\n")


def load_instances(path: str | Path) -> list[TrainingInstance]:
    out: list[TrainingInstance] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out.append(TrainingInstance(
                patient_id=rec["patient_id"],
                t=int(rec["t"]),
                sentences=[InstanceSentence(s["text"], s["report_id"])
                           for s in rec["sentences"]],
                queries=list(rec["queries"]),
                labels=[int(y) for y in rec["labels"]],
            ))
    return out
