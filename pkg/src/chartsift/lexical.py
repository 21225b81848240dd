"""Sentence splitting, tokenization, vocabulary, and TF-IDF scoring.

Sentence splitting is rule-based so that segmentation is deterministic and
dependency-free.  The rule set:

1. Blank lines (two or more consecutive newlines) always end a sentence.
2. Within a block, a run of ``.``, ``!`` or ``?`` (optionally followed by a
   closing quote/bracket) ends a sentence when the next non-space character
   is an uppercase letter or a digit, or when the block ends there.
3. Rule 2 is suppressed when the word before the punctuation is a known
   abbreviation (``Dr.``, ``e.g.``, ``No.`` ...; see ``ABBREVIATIONS``).
4. Sentences are stripped and internal whitespace is collapsed to single
   spaces; empty sentences are dropped.

The tokenizer lowercases and splits on word/punctuation boundaries; each
punctuation character is its own token.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

CLS, SEP, PAD, UNK = "[CLS]", "[SEP]", "[PAD]", "[UNK]"
CLS_ID, SEP_ID, PAD_ID, UNK_ID = 0, 1, 2, 3
SPECIAL_TOKENS = (CLS, SEP, PAD, UNK)

ABBREVIATIONS = frozenset({
    "dr", "mr", "mrs", "ms", "prof", "st", "jr", "sr",
    "vs", "etc", "approx", "dept", "fig", "no", "vol",
    "e.g", "i.e", "eg", "ie", "cf", "al", "resp",
})

_TOKEN_RE = re.compile(r"[a-z0-9]+|[^\sa-z0-9]")
_BLOCK_SPLIT_RE = re.compile(r"\n\s*\n")
_SENT_END_RE = re.compile(r"[.!?]+[\"')\]]?(?=\s|$)")
_TRAILING_WORD_RE = re.compile(r"([A-Za-z][A-Za-z.]*)$")
_WS_RE = re.compile(r"\s+")


def collapse_whitespace(text: str) -> str:
    return _WS_RE.sub(" ", text).strip()


def fingerprint(sentence: str) -> str:
    """Equality key for 'the same sentence': lowercase, collapsed whitespace."""
    return collapse_whitespace(sentence).lower()


def split_sentences(text: str) -> list[str]:
    """Split text into sentences per the module rule set."""
    sentences: list[str] = []
    for block in _BLOCK_SPLIT_RE.split(text):
        if not block.strip():
            continue
        start = 0
        for m in _SENT_END_RE.finditer(block):
            end = m.end()
            tail = block[end:]
            next_char = tail.lstrip()[:1]
            if next_char and not (next_char.isupper() or next_char.isdigit()):
                continue
            word = _TRAILING_WORD_RE.search(block[start:m.start()])
            if word and word.group(1).rstrip(".").lower() in ABBREVIATIONS:
                continue
            piece = collapse_whitespace(block[start:end])
            if piece:
                sentences.append(piece)
            start = end
        piece = collapse_whitespace(block[start:])
        if piece:
            sentences.append(piece)
    return sentences


def word_tokens(text: str) -> list[str]:
    """Lowercased surface tokens: alphanumeric runs and single punctuation marks."""
    return _TOKEN_RE.findall(text.lower())


@dataclass
class Vocabulary:
    """Token-to-id map with reserved special tokens.

    Ids are dense: specials occupy 0..3 and content tokens follow in
    (frequency desc, token asc) order from the fitting corpus.
    """

    token_to_id: dict[str, int]
    max_size: int | None = None
    min_frequency: int = 1

    def __len__(self) -> int:
        return len(self.token_to_id)

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def encode(self, sentence: str, max_tokens: int | None = None) -> list[int]:
        ids = [self.id_of(t) for t in word_tokens(sentence)]
        if max_tokens is not None:
            ids = ids[:max_tokens]
        return ids

    @classmethod
    def build(
        cls,
        texts: Iterable[str],
        max_size: int | None = None,
        min_frequency: int = 1,
    ) -> "Vocabulary":
        counts: dict[str, int] = {}
        for text in texts:
            for tok in word_tokens(text):
                counts[tok] = counts.get(tok, 0) + 1
        kept = [(tok, c) for tok, c in counts.items() if c >= min_frequency]
        kept.sort(key=lambda item: (-item[1], item[0]))
        if max_size is not None:
            kept = kept[: max(0, max_size - len(SPECIAL_TOKENS))]
        token_to_id = {tok: i for i, tok in enumerate(SPECIAL_TOKENS)}
        for tok, _ in kept:
            token_to_id[tok] = len(token_to_id)
        return cls(token_to_id, max_size=max_size, min_frequency=min_frequency)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# chartsift-vocab v1\n")
            for tok, idx in sorted(self.token_to_id.items(), key=lambda kv: kv[1]):
                fh.write(f"{tok}\t{idx}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        token_to_id: dict[str, int] = {}
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline()
            if not header.startswith("# chartsift-vocab"):
                raise ValueError(f"{path}: not a vocabulary file")
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                tok, idx = line.split("\t")
                token_to_id[tok] = int(idx)
        return cls(token_to_id)


@dataclass
class TfidfModel:
    """Smooth-idf TF-IDF with L2-normalized vectors.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1, over the fitting documents.
    """

    token_ids: dict[str, int]
    idf: np.ndarray
    n_documents: int

    def vector(self, text: str) -> dict[int, float]:
        counts: dict[int, int] = {}
        for tok in word_tokens(text):
            idx = self.token_ids.get(tok)
            if idx is not None:
                counts[idx] = counts.get(idx, 0) + 1
        vec = {idx: tf * self.idf[idx] for idx, tf in counts.items()}
        norm = math.sqrt(sum(w * w for w in vec.values()))
        if norm == 0.0:
            return {}
        return {idx: w / norm for idx, w in sorted(vec.items())}

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# chartsift-tfidf v1 n_documents={self.n_documents}\n")
            for tok, idx in sorted(self.token_ids.items(), key=lambda kv: kv[1]):
                fh.write(f"{tok}\t{float(self.idf[idx])!r}\n")

    @classmethod
    def load(cls, path: str | Path) -> "TfidfModel":
        token_ids: dict[str, int] = {}
        idfs: list[float] = []
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            m = re.match(r"# chartsift-tfidf v1 n_documents=(\d+)$", header)
            if m is None:
                raise ValueError(f"{path}: not a tfidf model file")
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                tok, idf = line.split("\t")
                token_ids[tok] = len(idfs)
                idfs.append(float(idf))
        return cls(token_ids, np.asarray(idfs, dtype=np.float64), int(m.group(1)))


def fit_tfidf(documents: Sequence[str]) -> TfidfModel:
    """Fit idf weights on a document collection (one string per document)."""
    if not documents:
        raise ValueError("tf-idf requires at least one document")
    df: dict[str, int] = {}
    for doc in documents:
        for tok in set(word_tokens(doc)):
            df[tok] = df.get(tok, 0) + 1
    tokens = sorted(df)
    n = len(documents)
    idf = np.array(
        [math.log((1 + n) / (1 + df[t])) + 1.0 for t in tokens], dtype=np.float64
    )
    return TfidfModel({t: i for i, t in enumerate(tokens)}, idf, n)


def cosine(u, v) -> float:
    """Cosine similarity; 0.0 when either vector has zero norm.

    Accepts sparse dict vectors (index -> weight) or dense array-likes.
    """
    if isinstance(u, Mapping) and isinstance(v, Mapping):
        if len(u) > len(v):
            u, v = v, u
        dot = sum(w * v[i] for i, w in u.items() if i in v)
        nu = math.sqrt(sum(w * w for w in u.values()))
        nv = math.sqrt(sum(w * w for w in v.values()))
    else:
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        if u.shape != v.shape:
            raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
        dot = float(u @ v)
        nu = float(np.linalg.norm(u))
        nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)
