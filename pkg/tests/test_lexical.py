import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chartsift.lexical import (
    PAD_ID,
    UNK_ID,
    TfidfModel,
    Vocabulary,
    collapse_whitespace,
    cosine,
    fingerprint,
    fit_tfidf,
    split_sentences,
    word_tokens,
)


class TestSplitSentences:
    def test_terminal_punctuation(self):
        assert split_sentences("A. B.") == ["A.", "B."]

    def test_empty(self):
        assert split_sentences("") == []
        assert split_sentences("   \n\n  ") == []

    def test_clinical_paragraph(self):
        # Expected segmentation obtained by hand-applying the documented
        # rules: abbreviation "Dr." and lowercase-after-"e.g." suppress
        # breaks; newline inside a block is whitespace; the blank line is a
        # hard break.
        text = (
            "Pt seen by Dr. Smith on 3/4. Reports headache since Tuesday.\n"
            "No fever. Hx of migraines (e.g. with aura). Plan: MRI brain.\n"
            "\n"
            "Follow up in 2 weeks."
        )
        assert split_sentences(text) == [
            "Pt seen by Dr. Smith on 3/4.",
            "Reports headache since Tuesday.",
            "No fever.",
            "Hx of migraines (e.g. with aura).",
            "Plan: MRI brain.",
            "Follow up in 2 weeks.",
        ]

    def test_no_terminal_punctuation(self):
        assert split_sentences("no punctuation here") == ["no punctuation here"]

    @given(st.text(alphabet=st.characters(codec="ascii", exclude_categories=["Cc"])
                   | st.sampled_from("\n .!?"), max_size=300))
    @settings(max_examples=300, deadline=None)
    def test_roundtrip_modulo_whitespace(self, text):
        parts = split_sentences(text)
        assert all(p == collapse_whitespace(p) and p for p in parts)
        assert collapse_whitespace(" ".join(parts)) == collapse_whitespace(text)


class TestTokenize:
    @pytest.fixture
    def vocab(self):
        return Vocabulary.build(["chest pain .", "chest mass"])

    def test_basic(self, vocab):
        ids = vocab.encode("Chest pain.")
        assert ids == [vocab.id_of("chest"), vocab.id_of("pain"), vocab.id_of(".")]
        assert UNK_ID not in ids

    def test_unknown_word(self, vocab):
        assert vocab.encode("zebra") == [UNK_ID]

    def test_truncation(self, vocab):
        ids = vocab.encode(" ".join(["chest"] * 1000), max_tokens=64)
        assert len(ids) == 64

    def test_specials_reserved(self, vocab):
        assert vocab.id_of("[CLS]") == 0
        assert vocab.id_of("[SEP]") == 1
        assert vocab.id_of("[PAD]") == PAD_ID
        ids = sorted(vocab.token_to_id.values())
        assert ids == list(range(len(vocab)))

    def test_idempotent_and_deterministic(self):
        text = "Chest x-ray: clear, no effusion!"
        toks = word_tokens(text)
        assert word_tokens(" ".join(toks)) == toks
        assert word_tokens(text) == toks

    def test_vocab_roundtrip(self, vocab, tmp_path):
        path = tmp_path / "vocab.txt"
        vocab.save(path)
        again = Vocabulary.load(path)
        assert again.token_to_id == vocab.token_to_id


class TestTfidf:
    def test_idf_of_ubiquitous_term(self):
        # Direct evaluation of the formula: term in both of 2 docs has
        # idf = ln(3/3) + 1 = 1.0.
        model = fit_tfidf(["chest pain", "chest mass"])
        assert model.idf[model.token_ids["chest"]] == pytest.approx(1.0)

    def test_out_of_vocabulary_text_is_zero_vector(self):
        model = fit_tfidf(["chest pain", "chest mass"])
        assert model.vector("zebra crossing") == {}

    def test_two_doc_weight_matrix(self):
        # Hand computation: tf * idf, then L2 normalization.
        model = fit_tfidf(["chest pain", "chest mass"])
        idf_shared = math.log(3 / 3) + 1.0
        idf_rare = math.log(3 / 2) + 1.0
        norm = math.sqrt(idf_shared**2 + idf_rare**2)
        vec = model.vector("chest pain")
        assert vec[model.token_ids["chest"]] == pytest.approx(idf_shared / norm)
        assert vec[model.token_ids["pain"]] == pytest.approx(idf_rare / norm)
        assert model.token_ids["mass"] not in vec

        vec2 = model.vector("chest chest pain")
        norm2 = math.sqrt((2 * idf_shared) ** 2 + idf_rare**2)
        assert vec2[model.token_ids["chest"]] == pytest.approx(2 * idf_shared / norm2)

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            fit_tfidf([])

    def test_model_roundtrip_bit_exact(self, tmp_path):
        model = fit_tfidf(["chest pain", "chest mass", "headache since tuesday"])
        path = tmp_path / "tfidf.txt"
        model.save(path)
        again = TfidfModel.load(path)
        assert again.token_ids == model.token_ids
        assert again.n_documents == model.n_documents
        assert np.array_equal(again.idf, model.idf)

    @given(st.lists(st.text(alphabet="abcde .", min_size=0, max_size=40), min_size=1,
                    max_size=8),
           st.text(alphabet="abcde .", max_size=40))
    @settings(max_examples=200, deadline=None)
    def test_vectors_unit_or_zero_norm(self, docs, text):
        if not any(word_tokens(d) for d in docs):
            docs = docs + ["a"]
        model = fit_tfidf(docs)
        vec = model.vector(text)
        norm = math.sqrt(sum(w * w for w in vec.values()))
        assert norm == pytest.approx(1.0, abs=1e-9) or norm == 0.0

    def test_disjoint_vocabulary_cosine_exactly_zero(self):
        model = fit_tfidf(["alpha beta", "gamma delta"])
        u = model.vector("alpha beta")
        v = model.vector("gamma delta")
        assert cosine(u, v) == 0.0


class TestCosine:
    def test_identical_vectors(self):
        assert cosine([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_hand_value(self):
        assert cosine([1.0, 2.0], [2.0, 1.0]) == pytest.approx(4 / 5)

    def test_zero_norm_defined_as_zero(self):
        assert cosine([0.0, 0.0], [1.0, 2.0]) == 0.0
        assert cosine({}, {0: 1.0}) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            cosine([1.0], [1.0, 2.0])


class TestFingerprint:
    def test_normalization(self):
        assert fingerprint("  Chest   PAIN \n") == "chest pain"
        assert fingerprint("chest pain") == fingerprint("Chest  Pain")
