"""Iteration orchestration: sample, annotate, retrain, evaluate, converge.

One iteration is a strict state machine (sampling -> annotating ->
retraining -> evaluated); an incomplete annotation leaves every piece of
state untouched so the iteration can be re-run. Convergence stops the loop
when the test macro-F1 gain falls below the configured threshold, with the
cross-validation/test gap reported alongside as the second indicator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .classifiers import (
    EvalReport,
    Hyperparameters,
    TopicClassifier,
    cross_validate,
    evaluate,
    prediction_from_probability,
    train_topic_classifier,
)
from .features import Vocabulary, fit_vocabulary, to_matrix
from .sampling import SampleBatch, compose_batch
from .store import OntologyStore


@dataclass(frozen=True)
class AnnotationRequest:
    """What an annotation source is shown for one selection: posting content
    and context only, never model output."""

    posting_id: str
    text: str
    platform: str
    candidate_topic: str | None
    iteration: int


@dataclass(frozen=True)
class BatchLabel:
    posting_id: str
    topics: tuple[str, ...]
    opinion_ids: tuple[str, ...] = ()
    new_opinions: tuple = ()


class AnnotationSource(Protocol):
    def label_batch(self, requests: list[AnnotationRequest]) -> list[BatchLabel]: ...


class IncompleteAnnotationError(Exception):
    """Labels missing for part of the batch; the iteration stays open."""

    def __init__(self, missing: list[str]):
        super().__init__(f"{len(missing)} batch member(s) unlabeled, e.g. {missing[:3]}")
        self.missing = missing


@dataclass
class LoopConfig:
    k_active: int = 10
    k_top_confidence: int = 10
    k_random: int = 5
    epsilon_gain: float = 0.005
    max_iterations: int = 20
    cv_folds: int = 5
    run_cv: bool = True
    search_budget: int = 0
    hyper: Hyperparameters = field(default_factory=Hyperparameters)
    seed: int = 0

    def baseline(self) -> "LoopConfig":
        """Random-only variant with the same per-topic batch size."""
        total = self.k_active + self.k_top_confidence + self.k_random
        return LoopConfig(
            k_active=0, k_top_confidence=0, k_random=total,
            epsilon_gain=self.epsilon_gain, max_iterations=self.max_iterations,
            cv_folds=self.cv_folds, run_cv=self.run_cv,
            search_budget=self.search_budget, hyper=self.hyper, seed=self.seed,
        )


@dataclass
class IterationRecord:
    iteration: int
    labeled_size: int
    unlabeled_size: int
    n_selections: int
    n_newly_labeled: int
    cv_report: EvalReport | None
    test_report: EvalReport
    gain: float | None
    cv_test_gap: dict[str, float] | None
    converged: bool
    reason: str
    flags: list[str] = field(default_factory=list)
    manifest: list[list] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "iteration": self.iteration,
            "labeled_size": self.labeled_size,
            "unlabeled_size": self.unlabeled_size,
            "n_selections": self.n_selections,
            "n_newly_labeled": self.n_newly_labeled,
            "cv_report": self.cv_report.as_dict() if self.cv_report else None,
            "test_report": self.test_report.as_dict(),
            "gain": self.gain,
            "cv_test_gap": self.cv_test_gap,
            "converged": self.converged,
            "reason": self.reason,
            "flags": self.flags,
            "manifest": self.manifest,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def check_convergence(records: list[IterationRecord], epsilon_gain: float) -> tuple[bool, str]:
    """Stop rule on the latest record: test macro-F1 gain below epsilon.

    The reason cites both indicators: the gain and the trend of the
    cross-validation/test gap.
    """
    if len(records) < 2:
        return False, "fewer than two iterations evaluated"
    latest = records[-1]
    gain = latest.test_report.macro_f1 - records[-2].test_report.macro_f1
    converged = gain < epsilon_gain
    parts = [f"test macro-F1 gain {gain:+.4f} "
             f"{'<' if converged else '>='} epsilon {epsilon_gain}"]
    gaps = [r.cv_test_gap["f1"] for r in records[-2:]
            if r.cv_test_gap is not None]
    if len(gaps) == 2:
        trend = "narrowing" if gaps[1] <= gaps[0] else "widening"
        parts.append(f"cv-test F1 gap {gaps[1]:.4f} ({trend})")
    else:
        parts.append("cv-test gap unavailable")
    return converged, "; ".join(parts)


class AugmentationLoop:
    """Dataset augmentation over an ontology store with a fixed test set.

    The vocabulary is fitted once over every posting text at construction
    and stays frozen across iterations; all classifiers share it.
    """

    def __init__(self, store: OntologyStore, topics: list[str], config: LoopConfig,
                 vocab: Vocabulary | None = None, ledger_path=None,
                 min_df: int = 2, ngram_range: tuple[int, int] = (1, 2)):
        self.store = store
        self.topics = sorted(topics)
        self.config = config
        self.ledger_path = ledger_path
        self._posting_ids = store.posting_ids()
        self._row = {pid: i for i, pid in enumerate(self._posting_ids)}
        texts = [store.posting(pid).text for pid in self._posting_ids]
        self.vocab = vocab or fit_vocabulary(texts, min_df=min_df, ngram_range=ngram_range)
        self.X = to_matrix(texts, self.vocab)
        self.test_ids = store.posting_ids("test-reserved")
        self.records: list[IterationRecord] = []
        self.classifiers: dict[str, TopicClassifier] = {}
        self._iteration = 0
        # batch awaiting annotation: set while an iteration is held open
        self._pending_batch: SampleBatch | None = None

    # -- dataset partitions --------------------------------------------------

    def labeled_ids(self) -> list[str]:
        return self.store.posting_ids("labeled")

    def unlabeled_ids(self) -> list[str]:
        return self.store.posting_ids("unlabeled")

    def _assert_partitions(self):
        labeled = set(self.labeled_ids())
        test = set(self.test_ids)
        unlabeled = set(self.unlabeled_ids())
        assert not labeled & test, "test postings leaked into the labeled set"
        assert not labeled & unlabeled and not test & unlabeled

    def _labels_for(self, ids: list[str]) -> dict[str, np.ndarray]:
        by_topic = self.store.topic_label_sets()
        return {
            t: np.array([1 if pid in by_topic[t] else 0 for pid in ids], dtype=int)
            for t in self.topics
        }

    def _matrix_for(self, ids: list[str]):
        return self.X[[self._row[pid] for pid in ids]]

    # -- training and evaluation ----------------------------------------------

    def _train_all(self, iteration: int) -> dict[str, TopicClassifier]:
        ids = self.labeled_ids()
        X = self._matrix_for(ids)
        y = self._labels_for(ids)
        return {
            t: train_topic_classifier(t, X, y[t], self.vocab, self.config.hyper,
                                      iteration=iteration, seed=self.config.seed)
            for t in self.topics
        }

    def _evaluate(self, classifiers) -> tuple[EvalReport | None, EvalReport]:
        test_X = self._matrix_for(self.test_ids)
        test_y = self._labels_for(self.test_ids)
        test_report = evaluate(classifiers, test_X, test_y)
        cv_report = None
        if self.config.run_cv:
            ids = self.labeled_ids()
            cv_report, _ = cross_validate(
                self._matrix_for(ids), self._labels_for(ids), self.vocab,
                k=self.config.cv_folds, seed=self.config.seed,
                hyper=self.config.hyper, search_budget=self.config.search_budget,
            )
        return cv_report, test_report

    def _gap(self, cv_report, test_report) -> dict[str, float] | None:
        if cv_report is None:
            return None
        return {
            "accuracy": abs(cv_report.macro_accuracy - test_report.macro_accuracy),
            "f1": abs(cv_report.macro_f1 - test_report.macro_f1),
        }

    def _record(self, record: IterationRecord):
        self.records.append(record)
        if self.ledger_path is not None:
            with open(self.ledger_path, "a", encoding="utf-8") as fh:
                fh.write(record.to_json() + "\n")

    def initialize(self) -> IterationRecord:
        """Train on the seed labeled set and evaluate: the iteration-0 record."""
        if self._iteration != 0 or self.records:
            raise RuntimeError("loop already initialized")
        self._assert_partitions()
        self.classifiers = self._train_all(0)
        cv_report, test_report = self._evaluate(self.classifiers)
        record = IterationRecord(
            iteration=0,
            labeled_size=len(self.labeled_ids()),
            unlabeled_size=len(self.unlabeled_ids()),
            n_selections=0,
            n_newly_labeled=0,
            cv_report=cv_report,
            test_report=test_report,
            gain=None,
            cv_test_gap=self._gap(cv_report, test_report),
            converged=False,
            reason="initial training on the seed labeled set",
        )
        self._record(record)
        return record

    # -- one iteration -----------------------------------------------------------

    def compose(self) -> SampleBatch:
        pool_ids = self.unlabeled_ids()
        exclude = set(self.labeled_ids()) | set(self.test_ids)
        pool_X = self._matrix_for(pool_ids)
        pools = {}
        for t in self.topics:
            probs = self.classifiers[t].predict_proba(pool_X)
            pools[t] = [
                prediction_from_probability(pid, float(p))
                for pid, p in zip(pool_ids, probs)
            ]
        return compose_batch(
            pools, iteration=self._iteration + 1, seed=self.config.seed,
            k_active=self.config.k_active,
            k_top_confidence=self.config.k_top_confidence,
            k_random=self.config.k_random, exclude=exclude,
        )

    def requests_for(self, batch: SampleBatch) -> list[AnnotationRequest]:
        requests = []
        for tid in sorted(batch.per_topic):
            for pid in batch.per_topic[tid].all_ids():
                posting = self.store.posting(pid)
                requests.append(AnnotationRequest(
                    posting_id=pid, text=posting.text, platform=posting.platform,
                    candidate_topic=tid, iteration=batch.iteration,
                ))
        return requests

    def run_iteration(self, annotation_source: AnnotationSource) -> IterationRecord:
        if not self.records:
            raise RuntimeError("call initialize() before running iterations")
        iteration = self._iteration + 1
        # a held-open iteration resumes with its original batch; labels may
        # have landed in the store in the meantime (service-side coding)
        if self._pending_batch is not None and self._pending_batch.iteration == iteration:
            batch = self._pending_batch
        else:
            batch = self.compose()
        requests = self.requests_for(batch)
        labels = annotation_source.label_batch(requests)
        by_id = {lab.posting_id: lab for lab in labels}
        missing = sorted({r.posting_id for r in requests} - set(by_id))
        if missing:
            # held open: no retraining; the batch is kept for the retry
            self._pending_batch = batch
            raise IncompleteAnnotationError(missing)
        self._pending_batch = None

        for pid, label in sorted(by_id.items()):
            self.store.label_posting(pid, label.topics, label.opinion_ids,
                                     label.new_opinions, source_batch=iteration)
        self._assert_partitions()

        self.classifiers = self._train_all(iteration)
        cv_report, test_report = self._evaluate(self.classifiers)
        previous = self.records[-1]
        gain = test_report.macro_f1 - previous.test_report.macro_f1
        record = IterationRecord(
            iteration=iteration,
            labeled_size=len(self.labeled_ids()),
            unlabeled_size=len(self.unlabeled_ids()),
            n_selections=batch.total_selections(),
            n_newly_labeled=len(self.labeled_ids()) - previous.labeled_size,
            cv_report=cv_report,
            test_report=test_report,
            gain=gain,
            cv_test_gap=self._gap(cv_report, test_report),
            converged=False,
            reason="",
            flags=list(batch.flags),
            manifest=[list(row) for row in batch.manifest_rows()],
        )
        converged, reason = check_convergence(self.records + [record],
                                              self.config.epsilon_gain)
        record.converged = converged
        record.reason = reason
        self._record(record)
        self._iteration = iteration
        return record

    def run(self, annotation_source: AnnotationSource,
            n_iterations: int | None = None,
            stop_on_convergence: bool = True) -> list[IterationRecord]:
        """Initialize if needed, then iterate until convergence or the cap."""
        if not self.records:
            self.initialize()
        limit = n_iterations if n_iterations is not None else self.config.max_iterations
        for _ in range(limit):
            record = self.run_iteration(annotation_source)
            if stop_on_convergence and record.converged:
                break
        return self.records


def run_baseline(store: OntologyStore, topics, config: LoopConfig,
                 annotation_source, n_iterations, vocab=None,
                 ledger_path=None, **loop_kwargs) -> list[IterationRecord]:
    """Same loop, batches drawn by uniform random sampling only."""
    loop = AugmentationLoop(store, topics, config.baseline(), vocab=vocab,
                            ledger_path=ledger_path, **loop_kwargs)
    return loop.run(annotation_source, n_iterations, stop_on_convergence=False)


def metrics_csv(records: list[IterationRecord]) -> str:
    """Per-iteration per-topic accuracy/F1 table (plus macro rows)."""
    lines = ["iteration,topic,source,accuracy,f1"]
    for rec in records:
        reports = [rec.test_report] + ([rec.cv_report] if rec.cv_report else [])
        for report in reports:
            for topic in sorted(report.per_topic):
                m = report.per_topic[topic]
                lines.append(f"{rec.iteration},{topic},{report.source},"
                             f"{m['accuracy']!r},{m['f1']!r}")
            lines.append(f"{rec.iteration},macro,{report.source},"
                         f"{report.macro_accuracy!r},{report.macro_f1!r}")
    return "\n".join(lines) + "\n"
