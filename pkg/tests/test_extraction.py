import pytest

from chartsift.corpus import CodeEvent, Corpus, Report
from chartsift.extraction import (
    SplitSpec,
    build_instances,
    load_instances,
    persistent_leaf_codes,
    save_instances,
    split_patients,
    truncate_instances,
)
from chartsift.synth import default_config, generate_synthetic, build_synth_hierarchy


def mk_corpus(reports, codes):
    c = Corpus()
    for r in reports:
        c.add_report(Report(*r))
    for e in codes:
        c.add_code_event(CodeEvent(*e))
    c.sort()
    return c


class TestPersistentLeafCodes:
    def test_single_occurrence_absent(self, seven_node_hierarchy):
        corpus = mk_corpus([], [("p1", "191", "ICD9", 100)])
        got = persistent_leaf_codes(corpus.patient("p1"), seven_node_hierarchy)
        assert got == {}

    def test_gem_twin_pools_occurrences(self, seven_node_hierarchy):
        # One ICD-9 event and one ICD-10 event whose GEM entry maps to the
        # same leaf: pooled, the leaf becomes persistent with 2 timestamps.
        seven_node_hierarchy.gem_map["S06.33"] = "851"
        corpus = mk_corpus([], [
            ("p1", "851", "ICD9", 200),
            ("p1", "S06.33", "ICD10", 100),
        ])
        # "851" falls in head_injury's 850-854 range.
        got = persistent_leaf_codes(corpus.patient("p1"), seven_node_hierarchy)
        assert got == {"head_injury": [100, 200]}

    def test_three_occurrences_sorted(self, seven_node_hierarchy):
        corpus = mk_corpus([], [
            ("p1", "191", "ICD9", 300),
            ("p1", "191", "ICD9", 100),
            ("p1", "191", "ICD9", 200),
        ])
        got = persistent_leaf_codes(corpus.patient("p1"), seven_node_hierarchy)
        assert got == {"brain_malignant": [100, 200, 300]}


class TestBuildInstances:
    def test_single_anchor(self, seven_node_hierarchy):
        corpus = mk_corpus(
            [("r0", "pA", "progress", 100, "History of falls. Dizzy spells."),
             ("r1", "pA", "radiology", 200, "MRI brain.")],
            [("pA", "191", "ICD9", 400), ("pA", "191", "ICD9", 500)])
        got = build_instances(corpus, seven_node_hierarchy)
        assert len(got) == 1
        inst = got[0]
        assert inst.key() == ("pA", 200)
        assert [s.text for s in inst.sentences] == ["History of falls.", "Dizzy spells."]
        # Hand walkthrough: brain_malignant positive; untouched leaves
        # negative; brain and neoplasm propagate positive; trauma negative.
        assert dict(zip(inst.queries, inst.labels)) == {
            "trauma": 0, "head_injury": 0, "spine_injury": 0,
            "neoplasm": 1, "brain": 1, "brain_malignant": 1, "brain_benign": 0,
        }
        assert inst.queries == ["trauma", "head_injury", "spine_injury",
                                "neoplasm", "brain", "brain_malignant", "brain_benign"]

    def test_no_radiology_in_window(self, seven_node_hierarchy):
        corpus = mk_corpus(
            [("r0", "pC", "radiology", 90, "Baseline scan."),
             ("r1", "pC", "progress", 300, "Note.")],
            [("pC", "225.0", "ICD9", 500), ("pC", "225.0", "ICD9", 700)])
        assert build_instances(corpus, seven_node_hierarchy) == []

    def test_shared_anchor_deduplicates(self, seven_node_hierarchy):
        corpus = mk_corpus(
            [("d0", "pD", "progress", 150, "Baseline note."),
             ("d1", "pD", "radiology", 200, "Scan.")],
            [("pD", "191", "ICD9", 400), ("pD", "191", "ICD9", 450),
             ("pD", "225.0", "ICD9", 380), ("pD", "225.0", "ICD9", 390)])
        got = build_instances(corpus, seven_node_hierarchy)
        assert len(got) == 1
        inst = got[0]
        assert set(inst.positives()) == {"brain_malignant", "brain_benign",
                                         "brain", "neoplasm"}

    def test_two_time_points_same_patient(self, seven_node_hierarchy):
        corpus = mk_corpus(
            [("b0", "pB", "progress", 50, "Fell off ladder. Complains of headache."),
             ("b1", "pB", "radiology", 100, "Head CT ordered."),
             ("b2", "pB", "radiology", 250, "Repeat imaging done.")],
            [("pB", "852.3", "ICD9", 300), ("pB", "852.3", "ICD9", 600),
             ("pB", "999.9", "ICD9", 10)])
        got = build_instances(corpus, seven_node_hierarchy)
        assert [inst.key() for inst in got] == [("pB", 100), ("pB", 250)]
        assert len(got[0].sentences) == 2
        assert len(got[1].sentences) == 3
        for inst in got:
            assert dict(zip(inst.queries, inst.labels))["head_injury"] == 1
            assert dict(zip(inst.queries, inst.labels))["trauma"] == 1

    def test_leaf_with_only_past_occurrences_is_excluded(self, seven_node_hierarchy):
        corpus = mk_corpus(
            [("e0", "pE", "progress", 100, "Old injury documented."),
             ("e1", "pE", "radiology", 200, "Scan.")],
            [("pE", "805.1", "ICD9", 50), ("pE", "805.1", "ICD9", 60),
             ("pE", "191", "ICD9", 400), ("pE", "191", "ICD9", 500)])
        got = build_instances(corpus, seven_node_hierarchy)
        assert len(got) == 1
        labels = dict(zip(got[0].queries, got[0].labels))
        assert "spine_injury" not in labels  # touched but not future: excluded
        assert labels["trauma"] == 0  # propagated from the negative head_injury
        assert labels["brain_malignant"] == 1

    def test_label_horizon_bounds_positives(self, seven_node_hierarchy):
        corpus = mk_corpus(
            [("r0", "pA", "progress", 100, "Note."),
             ("r1", "pA", "radiology", 200, "Scan.")],
            [("pA", "191", "ICD9", 400), ("pA", "191", "ICD9", 500)])
        assert build_instances(corpus, seven_node_hierarchy, label_horizon=150) == []
        with_horizon = build_instances(corpus, seven_node_hierarchy, label_horizon=300)
        assert len(with_horizon) == 1

    def test_roundtrip(self, seven_node_hierarchy, tmp_path):
        corpus = mk_corpus(
            [("r0", "pA", "progress", 100, "History of falls. Dizzy spells."),
             ("r1", "pA", "radiology", 200, "MRI brain.")],
            [("pA", "191", "ICD9", 400), ("pA", "191", "ICD9", 500)])
        got = build_instances(corpus, seven_node_hierarchy)
        path = tmp_path / "instances.jsonl"
        save_instances(got, path)
        assert load_instances(path) == got


@pytest.fixture(scope="module")
def synthetic():
    cfg = default_config(n_patients=100, rho=1.0)
    corpus, oracle = generate_synthetic(cfg, seed=42)
    hierarchy = build_synth_hierarchy(cfg)
    instances = build_instances(corpus, hierarchy)
    return corpus, oracle, hierarchy, instances


class TestInstanceInvariants:

    def test_no_leakage(self, synthetic):
        corpus, _, _, instances = synthetic
        for inst in instances:
            report_ts = {r.id: r.timestamp
                         for r in corpus.patient(inst.patient_id).reports}
            for s in inst.sentences:
                assert report_ts[s.report_id] < inst.t

    def test_positive_occurs_after_t(self, synthetic):
        corpus, _, hierarchy, instances = synthetic
        for inst in instances:
            patient = corpus.patient(inst.patient_id)
            persistent = persistent_leaf_codes(patient, hierarchy)
            for leaf in inst.positives():
                if not hierarchy.node(leaf).is_leaf:
                    continue
                assert any(ts > inst.t for ts in persistent[leaf])

    def test_negative_never_coded(self, synthetic):
        corpus, _, hierarchy, instances = synthetic
        for inst in instances:
            patient = corpus.patient(inst.patient_id)
            mapped = {hierarchy.map_code(e.code, e.system)
                      for e in patient.code_events}
            for leaf in inst.negatives():
                if hierarchy.node(leaf).is_leaf:
                    assert leaf not in mapped

    def test_dedup(self, synthetic):
        _, _, _, instances = synthetic
        keys = [inst.key() for inst in instances]
        assert len(keys) == len(set(keys))

    def test_oracle_entries_are_positive(self, synthetic):
        # rho=1: every oracle (patient, t, category) with a matching
        # instance must carry a positive label for that category.
        _, oracle, _, instances = synthetic
        by_key = {inst.key(): inst for inst in instances}
        matched = 0
        for (pid, t, cat) in oracle.entries:
            inst = by_key.get((pid, t))
            if inst is None:
                continue
            matched += 1
            assert dict(zip(inst.queries, inst.labels))[cat] == 1
        assert matched > 0


class TestSplits:
    def test_largest_remainder_rounding(self):
        ids = [f"p{i}" for i in range(10)]
        train, val, test = split_patients(ids, SplitSpec(seed=3))
        assert (len(train), len(val), len(test)) == (7, 1, 2)
        assert sorted(train + val + test) == sorted(ids)

    def test_disjoint_and_deterministic(self):
        ids = [f"p{i}" for i in range(57)]
        a = split_patients(ids, SplitSpec(seed=11))
        b = split_patients(ids, SplitSpec(seed=11))
        assert a == b
        train, val, test = a
        assert not (set(train) & set(val))
        assert not (set(train) & set(test))
        assert not (set(val) & set(test))

    def test_different_seed_changes_partition(self):
        ids = [f"p{i}" for i in range(40)]
        assert split_patients(ids, SplitSpec(seed=1)) != split_patients(
            ids, SplitSpec(seed=2))

    def test_invalid_ratios(self):
        with pytest.raises(ValueError):
            split_patients(["a"], SplitSpec(ratios=(0.5, 0.2, 0.2)))

    def test_truncation_exact_caps(self):
        cfg = default_config(n_patients=30)
        corpus, _ = generate_synthetic(cfg, seed=9)
        hierarchy = build_synth_hierarchy(cfg)
        instances = build_instances(corpus, hierarchy)
        assert len(instances) > 10
        kept = truncate_instances(instances, 10, seed=5)
        assert len(kept) == 10
        assert kept == sorted(kept, key=lambda i: i.key())
        assert truncate_instances(instances, 10, seed=5) == kept
        assert truncate_instances(instances, 10**6, seed=5) == instances
