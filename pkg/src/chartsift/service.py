"""HTTP interface: hierarchy browsing, report retrieval, ranking, annotations.

The service is read-only except for two endpoints: POST /hierarchy/custom
registers runtime categories (usable by every text-conditioned model), and
POST /annotations appends to a line-delimited log with last-write-wins
materialization, so an annotation session survives restarts and re-posting
a mark simply updates its ``relevant`` flag.

Ranking never exposes future labels; reports after a time-point are only
reachable through the explicit ``after`` browsing parameter used when
setting up annotation sessions.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel, Field

from .corpus import Corpus
from .hierarchy import DiagnosisHierarchy
from .lexical import TfidfModel, fingerprint
from .metrics import percentiles
from .model import (
    DESCRIPTION,
    FREE_TEXT,
    HIERARCHY,
    INDICATOR,
    ModelBundle,
    QuerySpec,
    contextual_scores,
    tfidf_scores,
)

MODEL_CHOICES = ("tfidf", "contextual", "indicator", "description", "hierarchy")
ANNOTATION_ROUNDS = ("reference", "validation")


class RankQuery(BaseModel):
    category_id: Optional[str] = None
    text: Optional[str] = None


class RankRequest(BaseModel):
    patient_id: str
    time_point: int
    query: RankQuery
    model: str = "description"
    top_k: int = Field(default=20, ge=1)
    # Blind responses omit the model identity so a validation-round client
    # never receives which model produced the ranking.
    blind: bool = False


class CustomCategoryRequest(BaseModel):
    name: str
    description: str


class AnnotationRequest(BaseModel):
    annotator: str
    patient_id: str
    time_point: int
    query: str
    fingerprint: str
    report_id: Optional[str] = None
    relevant: bool = True
    round: str = "reference"


@dataclass
class AnnotationStore:
    """Append-only JSONL log with last-write-wins materialization."""

    path: Path
    _lock: threading.Lock = field(default_factory=threading.Lock)
    _records: dict[str, dict] = field(default_factory=dict)

    def __post_init__(self):
        self.path = Path(self.path)
        if self.path.exists():
            with open(self.path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        rec = json.loads(line)
                        self._records[rec["id"]] = rec

    @staticmethod
    def record_id(rec: dict) -> str:
        key = "\x1f".join(str(rec[k]) for k in
                          ("annotator", "patient_id", "time_point", "query",
                           "fingerprint", "round"))
        return hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]

    def put(self, rec: dict) -> str:
        rec = dict(rec)
        rec["id"] = self.record_id(rec)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec) + "\n")
            self._records[rec["id"]] = rec
        return rec["id"]

    def list(self, round_filter: Optional[str] = None) -> list[dict]:
        with self._lock:
            records = list(self._records.values())
        if round_filter is not None:
            records = [r for r in records if r["round"] == round_filter]
        return sorted(records, key=lambda r: r["id"])


@dataclass
class ServiceState:
    corpus: Corpus
    hierarchy: DiagnosisHierarchy
    annotations: AnnotationStore
    bundle: Optional[ModelBundle] = None
    tfidf: Optional[TfidfModel] = None
    custom_categories: dict[str, dict] = field(default_factory=dict)
    _custom_lock: threading.Lock = field(default_factory=threading.Lock)

    def custom_descriptions(self) -> dict[str, str]:
        return {cid: c["description"] for cid, c in self.custom_categories.items()}

    def description_of(self, category_id: str) -> str:
        if category_id in self.custom_categories:
            return self.custom_categories[category_id]["description"]
        node = self.hierarchy.node(category_id)
        return node.description or node.name


def _resolve_query(state: ServiceState, req: RankRequest) -> tuple[QuerySpec, str]:
    """Returns (spec for trained models, description text for baselines)."""
    q = req.query
    if q.text:
        return QuerySpec(FREE_TEXT, text=q.text), q.text
    if not q.category_id:
        raise HTTPException(422, "query needs a category_id or text")
    cid = q.category_id
    known = cid in state.custom_categories or cid in state.hierarchy.nodes
    if not known:
        raise HTTPException(404, f"unknown category {cid}")
    mode = {"indicator": INDICATOR, "description": DESCRIPTION,
            "hierarchy": HIERARCHY}.get(req.model, DESCRIPTION)
    return QuerySpec(mode, category_id=cid), state.description_of(cid)


def create_app(state: ServiceState, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="chartsift", version="0.1.0")

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True),
                  name="console")

    @app.get("/hierarchy")
    def get_hierarchy():
        nodes = [{
            "id": n.id, "name": n.name, "description": n.description,
            "parent": n.parent, "children": list(n.children),
            "codes": list(n.codes), "depth": n.depth,
        } for n in state.hierarchy.nodes.values()]
        custom = [{"id": cid, **c} for cid, c in state.custom_categories.items()]
        return {"nodes": nodes, "custom": custom, "top_level": list(state.hierarchy.top_level)}

    @app.post("/hierarchy/custom", status_code=201)
    def add_custom(req: CustomCategoryRequest):
        if not req.description.strip():
            raise HTTPException(422, "custom categories need a description")
        with state._custom_lock:
            taken = {c["name"] for c in state.custom_categories.values()}
            taken |= {n.name for n in state.hierarchy.nodes.values()}
            if req.name in taken:
                raise HTTPException(409, f"category name {req.name!r} already exists")
            cid = f"custom:{len(state.custom_categories) + 1}"
            state.custom_categories[cid] = {
                "name": req.name, "description": req.description}
        return {"id": cid, "name": req.name, "description": req.description}

    @app.get("/patients/{patient_id}/reports")
    def get_reports(patient_id: str,
                    before: Optional[int] = Query(default=None),
                    after: Optional[int] = Query(default=None)):
        try:
            record = state.corpus.patient(patient_id)
        except KeyError:
            raise HTTPException(404, f"unknown patient {patient_id}")
        reports = record.reports
        if before is not None:
            reports = [r for r in reports if r.timestamp < before]
        if after is not None:
            reports = [r for r in reports if r.timestamp > after]
        return {"reports": [{
            "id": r.id, "kind": r.kind, "timestamp": r.timestamp, "text": r.text,
        } for r in reports]}

    @app.post("/rank")
    def rank(req: RankRequest):
        if req.model not in MODEL_CHOICES:
            raise HTTPException(422, f"unknown model {req.model!r}")
        try:
            sentences = state.corpus.sentences_before(req.patient_id, req.time_point)
        except KeyError:
            raise HTTPException(404, f"unknown patient {req.patient_id}")
        if not sentences:
            raise HTTPException(404, "no reports before the requested time point")
        spec, description = _resolve_query(state, req)
        texts = [s.text for s in sentences]

        probability = None
        if req.model == "tfidf":
            if state.tfidf is None:
                raise HTTPException(409, "tfidf model not fitted")
            scores = tfidf_scores(texts, description, state.tfidf)
        elif req.model == "contextual":
            if state.bundle is None:
                raise HTTPException(409, "no checkpoint loaded")
            scores = contextual_scores(state.bundle, texts, description)
        else:
            if state.bundle is None:
                raise HTTPException(409, "no checkpoint loaded")
            is_custom = (spec.mode != FREE_TEXT
                         and spec.category_id in state.custom_categories)
            if req.model == "indicator" and (is_custom or spec.mode == FREE_TEXT):
                raise HTTPException(
                    422, "the indicator model cannot rank custom or free-text queries")
            try:
                ranking = state.bundle.score_instance(
                    texts, spec, state.hierarchy,
                    custom_descriptions=state.custom_descriptions())
            except KeyError as exc:
                raise HTTPException(404, str(exc))
            probability = ranking.probability
            kept = ranking.kept_indices
            sentences = [sentences[i] for i in kept]
            texts = [texts[i] for i in kept]
            scores = ranking.scores

        pcts = percentiles(texts, scores)
        report_ts = {r.id: r.timestamp
                     for r in state.corpus.patient(req.patient_id).reports}
        order = sorted(range(len(texts)), key=lambda i: (-scores[i], i))
        items = [{
            "sentence": texts[i],
            "fingerprint": fingerprint(texts[i]),
            "report_id": sentences[i].report_id,
            "report_timestamp": report_ts[sentences[i].report_id],
            "sentence_index": sentences[i].index,
            "score": float(scores[i]),
            "percentile": float(pcts[i]),
        } for i in order[: req.top_k]]
        body = {"sentences": items}
        if not req.blind:
            body["model"] = req.model
            if probability is not None:
                body["probability"] = float(probability)
        return body

    @app.post("/annotations", status_code=201)
    def post_annotation(req: AnnotationRequest):
        if req.round not in ANNOTATION_ROUNDS:
            raise HTTPException(422, f"unknown round {req.round!r}")
        known = (req.query in state.custom_categories
                 or req.query in state.hierarchy.nodes)
        if not known:
            raise HTTPException(404, f"unknown query category {req.query}")
        try:
            sentences = state.corpus.sentences_before(req.patient_id, req.time_point)
        except KeyError:
            raise HTTPException(404, f"unknown patient {req.patient_id}")
        fps = {fingerprint(s.text) for s in sentences}
        if req.fingerprint not in fps:
            raise HTTPException(
                422, "fingerprint does not resolve within the instance")
        rec = req.model_dump()
        if req.query in state.custom_categories:
            # Keep the description inline so offline evaluation can embed
            # custom queries without the service's runtime registry.
            rec["query_description"] = state.custom_categories[req.query]["description"]
        rec_id = state.annotations.put(rec)
        return {"id": rec_id}

    @app.get("/annotations")
    def get_annotations(round: Optional[str] = Query(default=None)):
        return {"annotations": state.annotations.list(round)}

    return app


def build_state(
    corpus: Corpus,
    hierarchy: DiagnosisHierarchy,
    annotations_path: str | Path,
    bundle: Optional[ModelBundle] = None,
    tfidf: Optional[TfidfModel] = None,
) -> ServiceState:
    return ServiceState(
        corpus=corpus,
        hierarchy=hierarchy,
        annotations=AnnotationStore(Path(annotations_path)),
        bundle=bundle,
        tfidf=tfidf,
    )
