import json

import pytest
from fastapi.testclient import TestClient

from chartsift.corpus import CodeEvent, Corpus, Report
from chartsift.encoder import EncoderConfig
from chartsift.lexical import Vocabulary, fingerprint, fit_tfidf
from chartsift.metrics import validated_precision
from chartsift.model import new_bundle
from chartsift.service import ServiceState, AnnotationStore, build_state, create_app

from conftest import SEVEN_NODE_RECORDS


@pytest.fixture
def corpus():
    c = Corpus()
    c.add_report(Report("r1", "p1", "progress", 10,
                        "History of falls. Dizzy spells lately."))
    c.add_report(Report("r2", "p1", "radiology", 50, "MRI brain scheduled."))
    c.add_report(Report("r3", "p1", "visit", 90, "Future visit note."))
    c.add_report(Report("r4", "p2", "progress", 10, "Single note."))
    c.add_code_event(CodeEvent("p1", "191", "ICD9", 120))
    c.sort()
    return c


@pytest.fixture
def state(corpus, seven_node_hierarchy, tmp_path):
    vocab = Vocabulary.build(
        [n["description"] for n in SEVEN_NODE_RECORDS]
        + ["history of falls", "dizzy spells lately", "mri brain scheduled",
           "future visit note", "single note"])
    cfg = EncoderConfig(vocab_size=len(vocab), d_model=8, n_layers=1, n_heads=2,
                        d_ff=16, d_hidden=4, max_tokens_per_sentence=16)
    bundle = new_bundle(cfg, list(seven_node_hierarchy.nodes), vocab,
                        query_mode="description", seed=3)
    tfidf = fit_tfidf([r.text for p in corpus for r in p.reports]
                      + [n["description"] for n in SEVEN_NODE_RECORDS])
    return build_state(corpus, seven_node_hierarchy,
                       tmp_path / "annotations.jsonl", bundle=bundle, tfidf=tfidf)


@pytest.fixture
def client(state):
    return TestClient(create_app(state))


class TestHierarchyEndpoints:
    def test_get_hierarchy(self, client):
        body = client.get("/hierarchy").json()
        assert {n["id"] for n in body["nodes"]} == {
            "trauma", "head_injury", "spine_injury", "neoplasm", "brain",
            "brain_malignant", "brain_benign"}
        assert body["custom"] == []

    def test_create_custom_then_list(self, client):
        resp = client.post("/hierarchy/custom",
                           json={"name": "Vertigo", "description": "spinning dizziness"})
        assert resp.status_code == 201
        cid = resp.json()["id"]
        assert cid.startswith("custom:")
        listed = client.get("/hierarchy").json()["custom"]
        assert listed == [{"id": cid, "name": "Vertigo",
                           "description": "spinning dizziness"}]

    def test_duplicate_custom_name_conflicts(self, client):
        client.post("/hierarchy/custom", json={"name": "X", "description": "d"})
        resp = client.post("/hierarchy/custom", json={"name": "X", "description": "d"})
        assert resp.status_code == 409

    def test_custom_ranking_equals_free_text(self, client):
        cid = client.post("/hierarchy/custom", json={
            "name": "Dizziness", "description": "dizzy spells"}).json()["id"]
        base = {"patient_id": "p1", "time_point": 60, "model": "description",
                "top_k": 10}
        via_custom = client.post("/rank", json={
            **base, "query": {"category_id": cid}}).json()
        via_text = client.post("/rank", json={
            **base, "query": {"text": "dizzy spells"}}).json()
        assert via_custom["sentences"] == via_text["sentences"]


class TestReports:
    def test_before_filter(self, client):
        body = client.get("/patients/p1/reports", params={"before": 60}).json()
        assert [r["id"] for r in body["reports"]] == ["r1", "r2"]

    def test_after_filter_supports_future_browsing(self, client):
        body = client.get("/patients/p1/reports", params={"after": 60}).json()
        assert [r["id"] for r in body["reports"]] == ["r3"]

    def test_unknown_patient(self, client):
        assert client.get("/patients/ghost/reports").status_code == 404


class TestRank:
    def test_single_sentence_history_scores_one(self, client):
        resp = client.post("/rank", json={
            "patient_id": "p2", "time_point": 99,
            "query": {"category_id": "trauma"}, "model": "description",
            "top_k": 1})
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["sentences"]) == 1
        assert body["sentences"][0]["sentence"] == "Single note."
        assert body["sentences"][0]["score"] == pytest.approx(1.0)
        assert body["sentences"][0]["percentile"] == 0.0
        assert 0.0 < body["probability"] < 1.0

    def test_free_text_against_tfidf(self, client):
        resp = client.post("/rank", json={
            "patient_id": "p1", "time_point": 60,
            "query": {"text": "dizzy spells"}, "model": "tfidf", "top_k": 5})
        assert resp.status_code == 200
        body = resp.json()
        assert body["sentences"][0]["sentence"] == "Dizzy spells lately."
        assert body["sentences"][0]["score"] > 0.0
        assert "probability" not in body

    def test_indicator_rejects_custom_queries(self, client):
        cid = client.post("/hierarchy/custom", json={
            "name": "New", "description": "anything"}).json()["id"]
        resp = client.post("/rank", json={
            "patient_id": "p1", "time_point": 60,
            "query": {"category_id": cid}, "model": "indicator", "top_k": 5})
        assert resp.status_code == 422
        resp = client.post("/rank", json={
            "patient_id": "p1", "time_point": 60,
            "query": {"text": "anything"}, "model": "indicator", "top_k": 5})
        assert resp.status_code == 422

    def test_unknown_patient_and_category(self, client):
        assert client.post("/rank", json={
            "patient_id": "ghost", "time_point": 60,
            "query": {"category_id": "trauma"}, "model": "tfidf"}).status_code == 404
        assert client.post("/rank", json={
            "patient_id": "p1", "time_point": 60,
            "query": {"category_id": "ghost"}, "model": "tfidf"}).status_code == 404

    def test_no_history_before_t(self, client):
        resp = client.post("/rank", json={
            "patient_id": "p1", "time_point": 5,
            "query": {"category_id": "trauma"}, "model": "tfidf"})
        assert resp.status_code == 404

    def test_model_not_loaded_conflict(self, corpus, seven_node_hierarchy, tmp_path):
        bare = build_state(corpus, seven_node_hierarchy,
                           tmp_path / "a.jsonl", bundle=None, tfidf=None)
        client = TestClient(create_app(bare))
        for model in ("description", "tfidf"):
            resp = client.post("/rank", json={
                "patient_id": "p1", "time_point": 60,
                "query": {"category_id": "trauma"}, "model": model})
            assert resp.status_code == 409, model

    def test_sorted_by_score_descending(self, client):
        body = client.post("/rank", json={
            "patient_id": "p1", "time_point": 60,
            "query": {"category_id": "brain"}, "model": "description",
            "top_k": 10}).json()
        scores = [s["score"] for s in body["sentences"]]
        assert scores == sorted(scores, reverse=True)

    def test_rank_is_read_only(self, client, state):
        before = {pid: (len(p.reports), len(p.code_events))
                  for pid, p in state.corpus.patients.items()}
        n_nodes = len(state.hierarchy.nodes)
        client.post("/rank", json={
            "patient_id": "p1", "time_point": 60,
            "query": {"category_id": "trauma"}, "model": "description"})
        after = {pid: (len(p.reports), len(p.code_events))
                 for pid, p in state.corpus.patients.items()}
        assert before == after
        assert len(state.hierarchy.nodes) == n_nodes

    def test_blind_response_has_no_model_identity(self, client):
        resp = client.post("/rank", json={
            "patient_id": "p1", "time_point": 60,
            "query": {"category_id": "trauma"}, "model": "description",
            "top_k": 5, "blind": True})
        body = resp.json()
        assert "model" not in body
        assert "probability" not in body
        assert "description" not in json.dumps(body["sentences"])


class TestAnnotations:
    FP = fingerprint("History of falls.")

    def post_mark(self, client, relevant=True, round="reference",
                  fp=None, query="trauma"):
        return client.post("/annotations", json={
            "annotator": "a1", "patient_id": "p1", "time_point": 60,
            "query": query, "fingerprint": fp or self.FP,
            "relevant": relevant, "round": round})

    def test_store_then_get_roundtrip(self, client):
        resp = self.post_mark(client)
        assert resp.status_code == 201
        listed = client.get("/annotations").json()["annotations"]
        assert len(listed) == 1
        assert listed[0]["fingerprint"] == self.FP
        assert listed[0]["relevant"] is True

    def test_duplicate_post_same_id_updates_relevant(self, client):
        first = self.post_mark(client, relevant=True).json()["id"]
        second = self.post_mark(client, relevant=False).json()["id"]
        assert first == second
        listed = client.get("/annotations").json()["annotations"]
        assert len(listed) == 1
        assert listed[0]["relevant"] is False

    def test_round_filter(self, client):
        self.post_mark(client, round="reference")
        self.post_mark(client, round="validation",
                       fp=fingerprint("Dizzy spells lately."))
        ref = client.get("/annotations", params={"round": "reference"}).json()
        val = client.get("/annotations", params={"round": "validation"}).json()
        assert len(ref["annotations"]) == 1
        assert len(val["annotations"]) == 1

    def test_invalid_fingerprint_rejected(self, client):
        resp = self.post_mark(client, fp="not a real sentence")
        assert resp.status_code == 422

    def test_unknown_round_rejected(self, client):
        resp = self.post_mark(client, round="bogus")
        assert resp.status_code == 422

    def test_survives_restart(self, client, state):
        self.post_mark(client)
        reopened = ServiceState(
            corpus=state.corpus, hierarchy=state.hierarchy,
            annotations=AnnotationStore(state.annotations.path),
            bundle=state.bundle, tfidf=state.tfidf)
        client2 = TestClient(create_app(reopened))
        assert (client2.get("/annotations").json()
                == client.get("/annotations").json())

    def test_custom_query_records_description(self, client):
        cid = client.post("/hierarchy/custom", json={
            "name": "Dizziness", "description": "spinning sensation"}).json()["id"]
        self.post_mark(client, query=cid)
        rec = client.get("/annotations").json()["annotations"][0]
        assert rec["query_description"] == "spinning sensation"

    def test_static_console_mount(self, state, tmp_path):
        static = tmp_path / "dist"
        static.mkdir()
        (static / "index.html").write_text("<!doctype html><title>console</title>")
        client = TestClient(create_app(state, static_dir=static))
        resp = client.get("/ui/")
        assert resp.status_code == 200
        assert "console" in resp.text
        assert client.get("/hierarchy").status_code == 200

    def test_validated_precision_matches_metrics_module(self, client):
        marks = [(self.FP, True), (fingerprint("Dizzy spells lately."), False),
                 (fingerprint("MRI brain scheduled."), True)]
        for fp, relevant in marks:
            self.post_mark(client, relevant=relevant, round="validation", fp=fp)
        stored = client.get("/annotations",
                            params={"round": "validation"}).json()["annotations"]
        assert validated_precision(stored) == pytest.approx(2 / 3)
