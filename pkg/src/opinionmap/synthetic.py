"""Planted-signal synthetic corpora and a scripted annotation oracle.

The generator mimics the situation the augmentation loop is built for: a
seed labeled set covering only a narrow slice of each topic's vocabulary
("seed variants"), an unlabeled pool dominated by off-topic chatter whose
on-topic postings use the full vocabulary, and a fixed held-out test set
drawn from the full distribution. Classifiers trained on the seed alone
miss the hidden variants; the sampler has to surface them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

from .store import OntologyStore

DEFAULT_TOPICS = ("t-bushfires", "t-climate", "t-covid", "t-vaccines")


@dataclass
class SyntheticCorpus:
    topics: tuple[str, ...]
    texts: dict[str, str]
    truth_topics: dict[str, set[str]]
    truth_opinions: dict[str, set[str]]
    opinion_statements: dict[str, str]
    opinion_topics: dict[str, set[str]]
    seed_labeled: list[str]
    unlabeled: list[str]
    test: list[str]

    def all_ids(self) -> list[str]:
        return self.seed_labeled + self.unlabeled + self.test


def _doc(rng, noise, k_noise, signature=(), k_sig=0):
    tokens = list(rng.choice(noise, size=k_noise))
    if k_sig:
        tokens += list(rng.choice(signature, size=k_sig))
    rng.shuffle(tokens)
    return " ".join(tokens)


def make_planted_corpus(
    seed: int = 0,
    topics: tuple[str, ...] = DEFAULT_TOPICS,
    signature_size: int = 10,
    seed_visible: int = 2,
    noise_vocab: int = 250,
    late_noise_vocab: int = 60,
    n_seed_per_topic: int = 120,
    n_seed_offtopic: int = 320,
    n_unlabeled: int = 20000,
    pool_topic_rates: tuple[float, ...] = (0.03, 0.025, 0.015, 0.0075),
    n_test_per_topic: int = 40,
    n_test_offtopic: int = 240,
) -> SyntheticCorpus:
    """Build the three partitions with planted, partially hidden signals.

    Seed postings draw signature tokens only from the first seed_visible
    tokens of the topic signature; pool and test postings draw from the
    whole signature. Pool and test postings additionally mix in "late"
    noise tokens absent from the seed era, so that a hidden-variant
    positive and an off-topic posting have identical profiles over the
    seed-visible vocabulary: hidden variants are genuinely unlearnable
    until the sampler surfaces them for labeling.
    """
    rng = np.random.default_rng(seed)
    noise = [f"n{i:03d}" for i in range(noise_vocab)]
    late_noise = [f"ln{i:03d}" for i in range(late_noise_vocab)]
    # planted tokens must each survive tokenization as ONE token, with no
    # fragment shared between visible and hidden variants of a topic
    signatures = {t: [f"sig{ti}w{j}" for j in range(signature_size)]
                  for ti, t in enumerate(topics)}
    opinion_tokens = {}
    opinion_statements = {}
    opinion_topics = {}
    for ti, t in enumerate(topics):
        for v in ("a", "b"):
            oid = f"o-{t}-{v}"
            opinion_tokens[oid] = [f"opin{ti}{v}{j}" for j in range(2)]
            opinion_statements[oid] = f"planted opinion {v} about {t}"
            opinion_topics[oid] = {t}

    texts: dict[str, str] = {}
    truth_topics: dict[str, set[str]] = {}
    truth_opinions: dict[str, set[str]] = {}

    def add(pid, doc_topics, seed_era):
        doc_topics = set(doc_topics)
        ops = set()
        parts = []
        if not doc_topics:
            parts.append(_doc(rng, noise, 7))
            # late-era postings carry tokens the seed never saw, for both
            # classes, so absence-of-known-mass is not a topic signal
            parts.append(_doc(rng, noise if seed_era else late_noise, 3))
        else:
            for t in doc_topics:
                sig = signatures[t][:seed_visible] if seed_era else signatures[t]
                parts.append(_doc(rng, noise, 7, sig, 3))
                for v in ("a", "b"):
                    if rng.random() < 0.15:
                        oid = f"o-{t}-{v}"
                        ops.add(oid)
                        parts.append(" ".join(opinion_tokens[oid]))
        texts[pid] = " ".join(parts)
        truth_topics[pid] = doc_topics
        truth_opinions[pid] = ops

    seed_ids = []
    for t in topics:
        for j in range(n_seed_per_topic):
            pid = f"seed-{t}-{j:04d}"
            add(pid, {t}, seed_era=True)
            seed_ids.append(pid)
    for j in range(n_seed_offtopic):
        pid = f"seed-off-{j:04d}"
        add(pid, set(), seed_era=True)
        seed_ids.append(pid)

    pool_ids = []
    rates = dict(zip(topics, pool_topic_rates))
    for j in range(n_unlabeled):
        pid = f"pool-{j:05d}"
        r = rng.random()
        chosen: set[str] = set()
        acc = 0.0
        for t in topics:
            acc += rates[t]
            if r < acc:
                chosen = {t}
                # occasional genuinely multi-topic posting
                if rng.random() < 0.05:
                    other = topics[int(rng.integers(len(topics)))]
                    chosen.add(other)
                break
        add(pid, chosen, seed_era=False)
        pool_ids.append(pid)

    test_ids = []
    for t in topics:
        for j in range(n_test_per_topic):
            pid = f"test-{t}-{j:04d}"
            add(pid, {t}, seed_era=False)
            test_ids.append(pid)
    for j in range(n_test_offtopic):
        pid = f"test-off-{j:04d}"
        add(pid, set(), seed_era=False)
        test_ids.append(pid)

    return SyntheticCorpus(
        topics=tuple(topics),
        texts=texts,
        truth_topics=truth_topics,
        truth_opinions=truth_opinions,
        opinion_statements=opinion_statements,
        opinion_topics=opinion_topics,
        seed_labeled=seed_ids,
        unlabeled=pool_ids,
        test=test_ids,
    )


def corpus_to_store(corpus: SyntheticCorpus, label_opinions: bool = True) -> OntologyStore:
    """Materialize the corpus: seed postings labeled, test reserved+labeled,
    pool unlabeled."""
    store = OntologyStore()
    for t in corpus.topics:
        store.add_topic(t, t)
    for oid, statement in sorted(corpus.opinion_statements.items()):
        store.add_opinion(oid, statement, corpus.opinion_topics[oid])
    ts = datetime(2020, 1, 1, tzinfo=timezone.utc)
    for i, pid in enumerate(corpus.all_ids()):
        store.add_posting(pid, corpus.texts[pid], "facebook",
                          ts + timedelta(minutes=i % 10080))
    for pid in corpus.seed_labeled:
        opinions = corpus.truth_opinions[pid] if label_opinions else ()
        store.label_posting(pid, corpus.truth_topics[pid], opinions)
    store.mark_test_reserved(corpus.test)
    for pid in corpus.test:
        opinions = corpus.truth_opinions[pid] if label_opinions else ()
        store.label_posting(pid, corpus.truth_topics[pid], opinions)
    return store


class ScriptedOracle:
    """Annotation source answering from the corpus ground truth.

    Stands in for the expert coders in tests and demos; it sees exactly the
    payload a human would (and nothing else).
    """

    def __init__(self, corpus: SyntheticCorpus, label_opinions: bool = False,
                 fail_on: frozenset[str] = frozenset()):
        self.corpus = corpus
        self.label_opinions = label_opinions
        self.fail_on = fail_on
        self.seen_payload_fields: set[str] = set()

    def label_batch(self, requests):
        from .loop import BatchLabel

        labels = []
        for req in requests:
            self.seen_payload_fields.update(vars(req))
            if req.posting_id in self.fail_on:
                continue
            new_opinions = ()
            if self.label_opinions:
                new_opinions = tuple(
                    (self.corpus.opinion_statements[oid],
                     tuple(sorted(self.corpus.opinion_topics[oid])))
                    for oid in sorted(self.corpus.truth_opinions[req.posting_id])
                )
            labels.append(BatchLabel(
                posting_id=req.posting_id,
                topics=tuple(sorted(self.corpus.truth_topics[req.posting_id])),
                new_opinions=new_opinions,
            ))
        return labels
