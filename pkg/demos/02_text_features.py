"""Tokenization and TF-IDF features
==================================

The featurizer is deliberately small: lowercase alphanumeric tokens,
unigrams and bigrams, smoothed inverse document frequency, L2-normalized
vectors. Everything downstream (classifiers, sampling) shares one frozen
vocabulary.
"""

import math

from opinionmap import fit_vocabulary, tokenize, vectorize

print("tokenize('Climate-change ISN'T real!') ->",
      tokenize("Climate-change ISN'T real!"))

corpus = [
    "climate hoax continues",
    "climate change is real science",
    "the hoax is the real story",
    "climate change deniers push the hoax line",
]

vocab = fit_vocabulary(corpus, min_df=2)
print(f"\nvocabulary ({len(vocab)} terms with document frequency >= 2):")
for term, df in zip(vocab.terms, vocab.document_frequencies):
    print(f"  {term!r}: df={df}")

vec = vectorize(corpus[0], vocab)
print(f"\nTF-IDF of {corpus[0]!r}:")
for idx, weight in vec.items():
    print(f"  {vocab.terms[idx]!r}: {weight:.4f}")
norm = math.sqrt(sum(w * w for w in vec.values()))
print(f"L2 norm: {norm:.12f}")

# rarer terms always weigh more at equal term frequency
idf = {vocab.terms[i]: vocab.idf(i) for i in range(len(vocab))}
print("\ninverse document frequencies (rarer = larger):")
for term in sorted(idf, key=idf.get, reverse=True):
    print(f"  {term!r}: {idf[term]:.4f}")

# serialization round-trips exactly, and the hash pins classifier compatibility
restored = type(vocab).deserialize(vocab.serialize())
assert restored == vocab
print("\nvocabulary hash:", vocab.content_hash()[:16], "(round-trip exact)")
