"""Deterministic tokenization and n-gram TF-IDF vectorization.

All classifiers share one frozen :class:`Vocabulary`; vectorization is pure,
so vectors can be computed concurrently once the vocabulary is fitted.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix

# Unicode alphanumeric runs; underscore is a boundary like any other symbol.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

VOCAB_FORMAT_VERSION = "opinionmap-vocab v1"


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric boundaries, dropping empties."""
    return _TOKEN_RE.findall(text.lower())


def ngrams(tokens: list[str], ngram_range: tuple[int, int]) -> list[str]:
    """All n-grams (space-joined) for n in the inclusive range, in text order."""
    lo, hi = ngram_range
    out: list[str] = []
    for n in range(lo, hi + 1):
        out.extend(" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return out


@dataclass(frozen=True)
class Vocabulary:
    """Sorted n-gram terms with document frequencies over a fitted corpus."""

    terms: tuple[str, ...]
    document_frequencies: tuple[int, ...]
    corpus_size: int
    ngram_range: tuple[int, int] = (1, 2)
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)

    def idf(self, term_index: int) -> float:
        df = self.document_frequencies[term_index]
        return math.log((1 + self.corpus_size) / (1 + df)) + 1.0

    def serialize(self) -> str:
        lines = [
            VOCAB_FORMAT_VERSION,
            f"ngram\t{self.ngram_range[0]}\t{self.ngram_range[1]}",
            f"corpus_size\t{self.corpus_size}",
        ]
        lines.extend(f"{t}\t{df}" for t, df in zip(self.terms, self.document_frequencies))
        return "\n".join(lines) + "\n"

    @classmethod
    def deserialize(cls, text: str) -> "Vocabulary":
        lines = text.splitlines()
        if not lines or lines[0] != VOCAB_FORMAT_VERSION:
            raise ValueError("unrecognized vocabulary format")
        _, lo, hi = lines[1].split("\t")
        _, n = lines[2].split("\t")
        terms, dfs = [], []
        for line in lines[3:]:
            term, df = line.rsplit("\t", 1)
            terms.append(term)
            dfs.append(int(df))
        return cls(tuple(terms), tuple(dfs), int(n), (int(lo), int(hi)))

    def content_hash(self) -> str:
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()


def fit_vocabulary(
    corpus: list[str],
    min_df: int = 2,
    ngram_range: tuple[int, int] = (1, 2),
) -> Vocabulary:
    """Collect all n-grams with document frequency >= min_df, sorted.

    Raises ValueError on an empty corpus.
    """
    if not corpus:
        raise ValueError("cannot fit a vocabulary on an empty corpus")
    df: dict[str, int] = {}
    for text in corpus:
        for term in set(ngrams(tokenize(text), ngram_range)):
            df[term] = df.get(term, 0) + 1
    terms = sorted(t for t, c in df.items() if c >= min_df)
    return Vocabulary(
        terms=tuple(terms),
        document_frequencies=tuple(df[t] for t in terms),
        corpus_size=len(corpus),
        ngram_range=ngram_range,
    )


def vectorize(text: str, vocab: Vocabulary) -> dict[int, float]:
    """Sparse TF-IDF vector: tf * (ln((1+N)/(1+df)) + 1), then L2-normalized.

    Out-of-vocabulary terms are ignored; an all-OOV document yields {}.
    """
    counts: dict[int, int] = {}
    for term in ngrams(tokenize(text), vocab.ngram_range):
        idx = vocab.index.get(term)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    if not counts:
        return {}
    weights = {i: tf * vocab.idf(i) for i, tf in counts.items()}
    norm = math.sqrt(sum(w * w for w in weights.values()))
    return {i: w / norm for i, w in sorted(weights.items())}


def to_matrix(texts: list[str], vocab: Vocabulary) -> csr_matrix:
    """Stack vectorize() outputs into a CSR matrix (one row per text)."""
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for text in texts:
        vec = vectorize(text, vocab)
        indices.extend(vec.keys())
        data.extend(vec.values())
        indptr.append(len(indices))
    return csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int32)),
        shape=(len(texts), len(vocab)),
    )
