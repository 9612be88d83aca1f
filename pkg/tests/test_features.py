import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opinionmap.features import Vocabulary, fit_vocabulary, ngrams, to_matrix, tokenize, vectorize

from oracles import naive_tfidf, naive_vocabulary


def test_tokenize_rules():
    assert tokenize("Climate-change ISN'T real!") == ["climate", "change", "isn", "t", "real"]


def test_tokenize_empty():
    assert tokenize("") == []


@given(st.text(max_size=200))
@settings(max_examples=1000, deadline=None)
def test_tokenize_deterministic(text):
    assert tokenize(text) == tokenize(text)
    assert all(tok == tok.lower() for tok in tokenize(text))


def test_fit_vocabulary_min_df_1():
    vocab = fit_vocabulary(["climate hoax", "climate change"], min_df=1)
    assert set(vocab.terms) == {"change", "climate", "climate change", "climate hoax", "hoax"}
    assert list(vocab.terms) == sorted(vocab.terms)


def test_fit_vocabulary_min_df_2():
    vocab = fit_vocabulary(["climate hoax", "climate change"], min_df=2)
    assert vocab.terms == ("climate",)
    assert vocab.document_frequencies == (2,)


def test_fit_vocabulary_empty_corpus_rejected():
    with pytest.raises(ValueError):
        fit_vocabulary([])


def test_fit_vocabulary_matches_bruteforce_counter():
    docs = [
        f"topic {i % 7} word{i % 5} word{i % 3} filler text number {i}" for i in range(50)
    ]
    vocab = fit_vocabulary(docs, min_df=2)
    assert list(zip(vocab.terms, vocab.document_frequencies)) == naive_vocabulary(docs, 2, 1, 2)


def test_vectorize_frozen_example_unigrams():
    # Two-document corpus, unigram vocabulary; weights computed by the naive
    # reference and frozen here.
    vocab = fit_vocabulary(["climate hoax", "climate change"], min_df=1, ngram_range=(1, 1))
    vec = vectorize("climate hoax", vocab)
    by_term = {vocab.terms[i]: w for i, w in vec.items()}
    assert by_term["climate"] == pytest.approx(0.5797386715376657, abs=1e-9)
    assert by_term["hoax"] == pytest.approx(0.8148024746671689, abs=1e-9)


def test_vectorize_frozen_example_bigrams():
    vocab = fit_vocabulary(["climate hoax", "climate change"], min_df=1)
    by_term = {vocab.terms[i]: w for i, w in vectorize("climate hoax", vocab).items()}
    assert by_term["climate"] == pytest.approx(0.4494364165239821, abs=1e-9)
    assert by_term["hoax"] == pytest.approx(0.6316672017376245, abs=1e-9)
    assert by_term["climate hoax"] == pytest.approx(0.6316672017376245, abs=1e-9)


def test_vectorize_single_term_doc_normalizes_to_one():
    vocab = fit_vocabulary(["climate"], min_df=1)
    assert vectorize("climate", vocab) == {0: 1.0}


def test_vectorize_all_oov_is_zero_vector():
    vocab = fit_vocabulary(["climate hoax", "climate change"], min_df=1)
    assert vectorize("unrelated words entirely", vocab) == {}


def test_idf_monotone_in_rarity():
    # Same tf, rarer term gets strictly larger pre-normalization weight.
    docs = ["rare common", "common", "common other", "other common"]
    vocab = fit_vocabulary(docs, min_df=1, ngram_range=(1, 1))
    idf = {vocab.terms[i]: vocab.idf(i) for i in range(len(vocab))}
    assert idf["rare"] > idf["other"] > idf["common"]


@st.composite
def corpora(draw):
    words = st.sampled_from(
        ["climate", "hoax", "virus", "vaccine", "fire", "arson", "news", "mask", "cure", "lab"]
    )
    doc = st.lists(words, min_size=0, max_size=12).map(" ".join)
    return draw(st.lists(doc, min_size=1, max_size=30))


@given(corpora())
@settings(max_examples=100, deadline=None)
def test_vector_norm_is_unit(docs):
    vocab = fit_vocabulary(docs, min_df=1)
    for doc in docs:
        vec = vectorize(doc, vocab)
        if vec:
            assert math.sqrt(sum(w * w for w in vec.values())) == pytest.approx(1.0, abs=1e-9)


@given(corpora())
@settings(max_examples=50, deadline=None)
def test_vectorize_matches_naive_reference(docs):
    vocab = fit_vocabulary(docs, min_df=1)
    for doc in docs[:5]:
        got = {vocab.terms[i]: w for i, w in vectorize(doc, vocab).items()}
        want = naive_tfidf(doc, docs, 1, 1, 2)
        assert set(got) == set(want)
        for term in want:
            assert got[term] == pytest.approx(want[term], abs=1e-9)


def test_serialization_round_trip_exact():
    vocab = fit_vocabulary(["climate hoax only", "climate change now", "hoax now"], min_df=1)
    restored = Vocabulary.deserialize(vocab.serialize())
    assert restored == vocab
    assert restored.serialize() == vocab.serialize()
    assert restored.content_hash() == vocab.content_hash()


def test_to_matrix_rows_match_vectorize():
    docs = ["climate hoax", "climate change", "hoax again", ""]
    vocab = fit_vocabulary(docs, min_df=1)
    X = to_matrix(docs, vocab)
    assert X.shape == (4, len(vocab))
    for row, doc in enumerate(docs):
        dense = np.zeros(len(vocab))
        for i, w in vectorize(doc, vocab).items():
            dense[i] = w
        assert np.allclose(X.getrow(row).toarray().ravel(), dense)


def test_ngrams_order_and_content():
    assert ngrams(["a", "b", "c"], (1, 2)) == ["a", "b", "c", "a b", "b c"]
    assert ngrams([], (1, 2)) == []
