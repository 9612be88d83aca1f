"""Annotation task queue: lease-based claiming, label collection, agreement.

Tasks are served to annotators with everything they need except model
output: no scores, no predicted labels, ever. Claim/submit are linearized
per task behind one lock so concurrent annotators stay exclusive.
"""

from __future__ import annotations

import itertools
import threading
import time
from dataclasses import dataclass, field

from .store import InvalidOperationError, OntologyStore, StoreError, UnknownEntityError

TASK_STATES = ("open", "claimed", "submitted", "finalized")

DEFAULT_LEASE_SECONDS = 30 * 60.0


class ServiceError(Exception):
    def __init__(self, code: str, message: str, http_status: int = 400):
        super().__init__(message)
        self.code = code
        self.http_status = http_status


def exact_match_agreement(per_posting: dict[str, dict[str, tuple]],
                          annotator_a: str, annotator_b: str) -> float:
    """Share of postings whose full label sets (topics + opinions) coincide.

    per_posting: posting id -> {annotator id -> (topics tuple, opinions tuple)}.
    Raises ServiceError when the annotators share no postings.
    """
    shared = [pid for pid, coders in per_posting.items()
              if annotator_a in coders and annotator_b in coders]
    if not shared:
        raise ServiceError(
            "disjoint-task-sets",
            f"annotators {annotator_a!r} and {annotator_b!r} share no coded postings",
            http_status=422,
        )
    matches = sum(1 for pid in shared
                  if per_posting[pid][annotator_a] == per_posting[pid][annotator_b])
    return matches / len(shared)


@dataclass(frozen=True)
class LabelSubmission:
    task_id: str
    annotator_id: str
    topics: tuple[str, ...]
    opinion_ids: tuple[str, ...]
    submitted_at: float

    def label_sets(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        return (self.topics, self.opinion_ids)


@dataclass
class AnnotationTask:
    task_id: str
    iteration: int
    posting_id: str
    candidate_topic: str | None
    created_seq: int
    state: str = "open"
    claimed_by: str | None = None
    lease_expires: float | None = None
    # annotator id -> submission; insertion order = submission order
    submissions: dict[str, LabelSubmission] = field(default_factory=dict)


class AnnotationService:
    """In-memory queue over an ontology store; one instance per deployment.

    double_coding: when True each task must be finalized by two distinct
    annotators; triples are written from the first submission and the
    second only feeds the agreement metric.
    """

    def __init__(self, store: OntologyStore, lease_seconds: float = DEFAULT_LEASE_SECONDS,
                 clock=time.time, double_coding: bool = False):
        self.store = store
        self.lease_seconds = lease_seconds
        self.clock = clock
        self.required_coders = 2 if double_coding else 1
        self._lock = threading.RLock()
        self._tasks: dict[str, AnnotationTask] = {}
        self._published_iterations: set[int] = set()
        self._seq = itertools.count()

    # -- publication ---------------------------------------------------------

    def publish_batch(self, iteration: int, selections) -> list[str]:
        """One open task per (posting, topic-context) selection.

        selections: iterable of (topic_id, posting_id) pairs, e.g. flattened
        batch manifest rows. Republishing an iteration is rejected.
        """
        with self._lock:
            if iteration in self._published_iterations:
                raise ServiceError("already-published",
                                   f"iteration {iteration} already has a published batch",
                                   http_status=409)
            task_ids = []
            for topic_id, posting_id in selections:
                self.store.posting(posting_id)  # raises for unknown ids
                seq = next(self._seq)
                task_id = f"task-{iteration}-{seq:05d}"
                self._tasks[task_id] = AnnotationTask(
                    task_id, iteration, posting_id, topic_id, seq)
                task_ids.append(task_id)
            self._published_iterations.add(iteration)
            return task_ids

    # -- claiming --------------------------------------------------------------

    def _release_expired(self, now: float):
        for task in self._tasks.values():
            if task.state == "claimed" and task.lease_expires is not None \
                    and task.lease_expires <= now:
                task.state = "open"
                task.claimed_by = None
                task.lease_expires = None

    def task_payload(self, task: AnnotationTask) -> dict:
        """Annotator-facing view: posting content and context, no model output."""
        posting = self.store.posting(task.posting_id)
        return {
            "task_id": task.task_id,
            "iteration": task.iteration,
            "candidate_topic": task.candidate_topic,
            "posting": {
                "id": posting.id,
                "text": posting.text,
                "platform": posting.platform,
                "place": posting.place_id,
                "timestamp_iso8601": posting.timestamp.isoformat(),
            },
            "lease_expires_at": task.lease_expires,
        }

    def claim_next(self, annotator_id: str) -> dict | None:
        """Claim the oldest open task not already coded by this annotator."""
        with self._lock:
            now = self.clock()
            self._release_expired(now)
            candidates = sorted(
                (t for t in self._tasks.values()
                 if t.state == "open" and annotator_id not in t.submissions),
                key=lambda t: t.created_seq,
            )
            if not candidates:
                return None
            task = candidates[0]
            task.state = "claimed"
            task.claimed_by = annotator_id
            task.lease_expires = now + self.lease_seconds
            return self.task_payload(task)

    # -- submission ---------------------------------------------------------

    def _task(self, task_id: str) -> AnnotationTask:
        try:
            return self._tasks[task_id]
        except KeyError:
            raise ServiceError("unknown-task", f"unknown task {task_id!r}",
                               http_status=404) from None

    def submit_labels(self, task_id: str, annotator_id: str, topics,
                      opinion_ids=(), new_opinions=()) -> dict:
        """Validate and record a submission; write triples on first coding."""
        with self._lock:
            now = self.clock()
            self._release_expired(now)
            task = self._task(task_id)
            if task.state != "claimed" or task.claimed_by != annotator_id:
                raise ServiceError(
                    "stale-lease",
                    f"task {task_id!r} is not currently claimed by {annotator_id!r}",
                    http_status=409,
                )
            topics = set(topics)
            opinion_ids = set(opinion_ids)
            for tid in topics:
                try:
                    self.store.topic(tid)
                except UnknownEntityError as exc:
                    raise ServiceError("unknown-entity", str(exc), http_status=422)
            if not topics and (opinion_ids or new_opinions):
                raise ServiceError("invalid-labels",
                                   "off-topic submissions cannot carry opinions",
                                   http_status=422)
            for oid in opinion_ids:
                try:
                    opinion = self.store.opinion(oid)
                except UnknownEntityError as exc:
                    raise ServiceError("unknown-entity", str(exc), http_status=422)
                if not opinion.active:
                    raise ServiceError("invalid-labels",
                                       f"opinion {oid!r} is not active", http_status=422)
                if not opinion.topic_ids & topics:
                    raise ServiceError(
                        "invalid-labels",
                        f"opinion {oid!r} does not belong to any selected topic",
                        http_status=422,
                    )
            normalized_new = []
            for spec in new_opinions:
                statement = spec["statement"] if isinstance(spec, dict) else spec[0]
                op_topics = set(spec["topic_ids"] if isinstance(spec, dict) else spec[1])
                conspiracy = bool(spec.get("conspiracy", False)) if isinstance(spec, dict) \
                    else (bool(spec[2]) if len(spec) > 2 else False)
                if not op_topics or not op_topics <= topics:
                    raise ServiceError(
                        "invalid-labels",
                        f"new opinion {statement!r} must attach to selected topics",
                        http_status=422,
                    )
                normalized_new.append((statement, op_topics, conspiracy))

            first_coding = not task.submissions
            created_ids: list[str] = []
            triples_written = 0
            if first_coding:
                before = {o.id for o in self.store.opinions()}
                try:
                    triples_written = self.store.label_posting(
                        task.posting_id, topics, opinion_ids, normalized_new,
                        source_batch=task.iteration)
                except StoreError as exc:
                    raise ServiceError("store-rejected", str(exc), http_status=422)
                created_ids = sorted({o.id for o in self.store.opinions()} - before)
            else:
                # later coders may reference opinions created by the first
                for statement, op_topics, conspiracy in normalized_new:
                    existing = self.store.find_opinion_by_statement(statement)
                    if existing is not None:
                        opinion_ids.add(existing.id)

            task.submissions[annotator_id] = LabelSubmission(
                task_id=task.task_id,
                annotator_id=annotator_id,
                topics=tuple(sorted(topics)),
                opinion_ids=tuple(sorted(opinion_ids | set(created_ids))),
                submitted_at=now,
            )
            if len(task.submissions) >= self.required_coders:
                task.state = "finalized"
            else:
                task.state = "open"
            task.claimed_by = None
            task.lease_expires = None
            return {
                "accepted": True,
                "task_state": task.state,
                "triples_written": triples_written,
                "opinions_created": created_ids,
            }

    # -- observation -----------------------------------------------------------

    def progress(self, iteration: int) -> dict:
        with self._lock:
            self._release_expired(self.clock())
            counts = {state: 0 for state in TASK_STATES}
            for task in self._tasks.values():
                if task.iteration == iteration:
                    counts[task.state] += 1
            return {"iteration": iteration, "counts": counts,
                    "total": sum(counts.values())}

    def iteration_tasks(self, iteration: int) -> list[AnnotationTask]:
        return sorted((t for t in self._tasks.values() if t.iteration == iteration),
                      key=lambda t: t.created_seq)

    def finalized_posting_ids(self, iteration: int) -> list[str]:
        return sorted({t.posting_id for t in self.iteration_tasks(iteration)
                       if t.state == "finalized"})

    def agreement(self, iteration: int, annotator_a: str, annotator_b: str) -> float:
        """Share of postings with identical full label sets from both coders."""
        with self._lock:
            per_posting: dict[str, dict[str, tuple]] = {}
            for task in self.iteration_tasks(iteration):
                for coder, sub in task.submissions.items():
                    per_posting.setdefault(task.posting_id, {})[coder] = sub.label_sets()
            return exact_match_agreement(per_posting, annotator_a, annotator_b)


class ServiceAnnotationSource:
    """Annotation source backed by human coders working through the service.

    label_batch publishes the batch (idempotently: a republish of the same
    iteration is treated as "already in progress") and then waits up to
    poll_timeout seconds for every task to finalize. Returning fewer labels
    than requests makes the loop hold the iteration open; calling it again
    later resumes polling the same tasks.
    """

    def __init__(self, service: AnnotationService, poll_timeout: float = 0.0,
                 poll_interval: float = 1.0, sleep=time.sleep):
        self.service = service
        self.poll_timeout = poll_timeout
        self.poll_interval = poll_interval
        self.sleep = sleep

    def label_batch(self, requests):
        from .loop import BatchLabel

        if not requests:
            return []
        iteration = requests[0].iteration
        try:
            self.service.publish_batch(
                iteration, [(r.candidate_topic, r.posting_id) for r in requests])
        except ServiceError as exc:
            if exc.code != "already-published":
                raise
        deadline = self.service.clock() + self.poll_timeout
        while True:
            counts = self.service.progress(iteration)["counts"]
            if counts["open"] == 0 and counts["claimed"] == 0 \
                    and counts["submitted"] == 0:
                break
            if self.service.clock() >= deadline:
                break
            self.sleep(self.poll_interval)
        labels = []
        for task in self.service.iteration_tasks(iteration):
            if task.state != "finalized" or not task.submissions:
                continue
            first = next(iter(task.submissions.values()))
            labels.append(BatchLabel(
                posting_id=task.posting_id,
                topics=first.topics,
                opinion_ids=first.opinion_ids,
            ))
        return labels
