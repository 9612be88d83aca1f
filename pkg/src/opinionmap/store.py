"""Store for topics, opinions, places, postings and the triples linking them.

Entities and triples live in memory behind a single-writer lock and persist
to newline-delimited JSON records. Exports are canonically sorted so that a
save/load round trip is byte-identical.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .features import tokenize

PLATFORMS = ("facebook", "twitter", "youtube", "other")
PREDICATES = ("expresses_opinion", "about_topic", "posted_in", "opinion_of_topic")
LABEL_STATES = ("unlabeled", "labeled", "test-reserved")

STATUS_ACTIVE = "active"
STATUS_MERGED = "merged-into"
STATUS_SPLIT = "split-into"


class StoreError(Exception):
    """Base class for store violations."""


class UnknownEntityError(StoreError):
    pass


class DuplicateEntityError(StoreError):
    pass


class InvalidOperationError(StoreError):
    pass


@dataclass(frozen=True)
class Topic:
    id: str
    name: str
    keywords: frozenset[str] = frozenset()


@dataclass
class Opinion:
    id: str
    statement: str
    topic_ids: set[str]
    conspiracy: bool = False
    status: str = STATUS_ACTIVE
    merged_into: str | None = None
    split_into: tuple[str, ...] = ()

    @property
    def active(self) -> bool:
        return self.status == STATUS_ACTIVE


@dataclass(frozen=True)
class InternetPlace:
    id: str
    platform: str
    url_or_handle: str


@dataclass
class Posting:
    id: str
    text: str
    platform: str
    timestamp: datetime
    place_id: str | None = None
    label_state: str = "unlabeled"
    source_batch: int | None = None


@dataclass
class IngestReport:
    ingested: int = 0
    skipped_duplicates: int = 0
    per_topic: dict[str, int] = field(default_factory=dict)
    off_keyword: int = 0
    errors: list[str] = field(default_factory=list)


def parse_timestamp(value: str) -> datetime:
    ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def read_posting_records(lines):
    """Yield (record, error) pairs from newline-delimited JSON posting input."""
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            yield None, f"line {lineno}: invalid JSON ({exc.msg})"
            continue
        yield record, None


def _keyword_token_sequences(keywords):
    return [tuple(tokenize(kw)) for kw in keywords if tokenize(kw)]


def _contains_sequence(tokens: list[str], seq: tuple[str, ...]) -> bool:
    n = len(seq)
    return any(tuple(tokens[i : i + n]) == seq for i in range(len(tokens) - n + 1))


class OntologyStore:
    """Four entity kinds plus set-semantics triples, with keyword ingestion.

    Concurrency model: all mutations are serialized through one lock;
    read methods return fresh containers, safe to share across threads.
    """

    def __init__(self):
        self._lock = threading.RLock()
        self._topics: dict[str, Topic] = {}
        self._opinions: dict[str, Opinion] = {}
        self._places: dict[str, InternetPlace] = {}
        self._postings: dict[str, Posting] = {}
        self._triples: set[tuple[str, str, str]] = set()

    # -- entity management -------------------------------------------------

    def add_topic(self, topic_id: str, name: str, keywords=()) -> Topic:
        with self._lock:
            if topic_id in self._topics:
                raise DuplicateEntityError(f"topic {topic_id!r} already exists")
            topic = Topic(topic_id, name, frozenset(keywords))
            self._topics[topic_id] = topic
            return topic

    def add_opinion(self, opinion_id, statement, topic_ids, conspiracy=False) -> Opinion:
        with self._lock:
            if opinion_id in self._opinions:
                raise DuplicateEntityError(f"opinion {opinion_id!r} already exists")
            topic_ids = set(topic_ids)
            if not topic_ids:
                raise InvalidOperationError("an active opinion must link to at least one topic")
            for tid in topic_ids:
                if tid not in self._topics:
                    raise UnknownEntityError(f"unknown entity {tid!r}")
            existing = self.find_opinion_by_statement(statement)
            if existing is not None:
                raise DuplicateEntityError(
                    f"statement already used by active opinion {existing.id!r}"
                )
            opinion = Opinion(opinion_id, statement, topic_ids, conspiracy)
            self._opinions[opinion_id] = opinion
            for tid in topic_ids:
                self._triples.add((opinion_id, "opinion_of_topic", tid))
            return opinion

    def add_place(self, place_id, platform, url_or_handle) -> InternetPlace:
        with self._lock:
            if place_id in self._places:
                raise DuplicateEntityError(f"place {place_id!r} already exists")
            if platform not in PLATFORMS:
                raise InvalidOperationError(f"unknown platform {platform!r}")
            place = InternetPlace(place_id, platform, url_or_handle)
            self._places[place_id] = place
            return place

    def add_posting(self, posting_id, text, platform, timestamp, place_id=None,
                    label_state="unlabeled", source_batch=None) -> Posting:
        with self._lock:
            if posting_id in self._postings:
                raise DuplicateEntityError(f"posting {posting_id!r} already exists")
            if platform not in PLATFORMS:
                raise InvalidOperationError(f"unknown platform {platform!r}")
            if label_state not in LABEL_STATES:
                raise InvalidOperationError(f"unknown label state {label_state!r}")
            if place_id is not None and place_id not in self._places:
                raise UnknownEntityError(f"unknown entity {place_id!r}")
            if isinstance(timestamp, str):
                timestamp = parse_timestamp(timestamp)
            posting = Posting(posting_id, text, platform, timestamp, place_id,
                              label_state, source_batch)
            self._postings[posting_id] = posting
            return posting

    def topic(self, topic_id) -> Topic:
        try:
            return self._topics[topic_id]
        except KeyError:
            raise UnknownEntityError(f"unknown entity {topic_id!r}") from None

    def opinion(self, opinion_id) -> Opinion:
        try:
            return self._opinions[opinion_id]
        except KeyError:
            raise UnknownEntityError(f"unknown entity {opinion_id!r}") from None

    def posting(self, posting_id) -> Posting:
        try:
            return self._postings[posting_id]
        except KeyError:
            raise UnknownEntityError(f"unknown entity {posting_id!r}") from None

    def topics(self) -> list[Topic]:
        return sorted(self._topics.values(), key=lambda t: t.id)

    def opinions(self, active_only=False) -> list[Opinion]:
        out = self._opinions.values()
        if active_only:
            out = [o for o in out if o.active]
        return sorted(out, key=lambda o: o.id)

    def active_opinions_of_topic(self, topic_id) -> list[Opinion]:
        return [o for o in self.opinions(active_only=True) if topic_id in o.topic_ids]

    def find_opinion_by_statement(self, statement) -> Opinion | None:
        for op in self._opinions.values():
            if op.active and op.statement == statement:
                return op
        return None

    def postings(self) -> list[Posting]:
        return sorted(self._postings.values(), key=lambda p: p.id)

    def posting_ids(self, label_state=None) -> list[str]:
        return sorted(
            pid for pid, p in self._postings.items()
            if label_state is None or p.label_state == label_state
        )

    # -- triples ------------------------------------------------------------

    _TRIPLE_KINDS = {
        "expresses_opinion": ("posting", "opinion"),
        "about_topic": ("posting", "topic"),
        "posted_in": ("posting", "place"),
        "opinion_of_topic": ("opinion", "topic"),
    }

    def _entity_exists(self, kind, entity_id):
        table = {
            "posting": self._postings,
            "opinion": self._opinions,
            "topic": self._topics,
            "place": self._places,
        }[kind]
        return entity_id in table

    def assert_triple(self, subject, predicate, obj) -> int:
        """Insert one triple; returns 1 if new, 0 if already present."""
        with self._lock:
            if predicate not in PREDICATES:
                raise InvalidOperationError(f"unknown predicate {predicate!r}")
            skind, okind = self._TRIPLE_KINDS[predicate]
            if not self._entity_exists(skind, subject):
                raise UnknownEntityError(f"unknown entity {subject!r}")
            if not self._entity_exists(okind, obj):
                raise UnknownEntityError(f"unknown entity {obj!r}")
            triple = (subject, predicate, obj)
            if triple in self._triples:
                return 0
            self._triples.add(triple)
            if predicate == "opinion_of_topic":
                self._opinions[subject].topic_ids.add(obj)
            return 1

    def retract_triple(self, subject, predicate, obj) -> int:
        with self._lock:
            try:
                self._triples.remove((subject, predicate, obj))
            except KeyError:
                return 0
            if predicate == "opinion_of_topic" and subject in self._opinions:
                self._opinions[subject].topic_ids.discard(obj)
            return 1

    def query(self, subject=None, predicate=None, obj=None) -> list[tuple[str, str, str]]:
        """Exact match on bound positions; result sorted for determinism."""
        return sorted(
            t for t in self._triples
            if (subject is None or t[0] == subject)
            and (predicate is None or t[1] == predicate)
            and (obj is None or t[2] == obj)
        )

    def query_topics(self, posting_id) -> set[str]:
        """Explicit about_topic links plus topics derived through opinions."""
        self.posting(posting_id)
        topics = {t[2] for t in self._triples if t[0] == posting_id and t[1] == "about_topic"}
        for s, p, o in self._triples:
            if s == posting_id and p == "expresses_opinion":
                topics |= self._opinions[o].topic_ids
        return topics

    def check_referential_integrity(self) -> list[str]:
        """Full-scan audit; returns human-readable violations (empty = clean)."""
        problems = []
        for s, p, o in sorted(self._triples):
            skind, okind = self._TRIPLE_KINDS[p]
            if not self._entity_exists(skind, s):
                problems.append(f"dangling subject {s!r} in ({s}, {p}, {o})")
            if not self._entity_exists(okind, o):
                problems.append(f"dangling object {o!r} in ({s}, {p}, {o})")
        return problems

    # -- labeling -----------------------------------------------------------

    def label_posting(self, posting_id, topics, opinion_ids=(), new_opinions=(),
                      source_batch=None) -> int:
        """Record an annotation outcome; empty topics = explicit off-topic.

        new_opinions entries are (statement, topic_ids) or
        (statement, topic_ids, conspiracy); an existing active opinion with
        the same statement is reused rather than duplicated.
        """
        with self._lock:
            posting = self.posting(posting_id)
            if posting.label_state == "test-reserved" and source_batch is not None:
                raise InvalidOperationError(
                    f"posting {posting_id!r} is test-reserved and cannot join a training batch"
                )
            topics = set(topics)
            for tid in topics:
                self.topic(tid)
            opinion_ids = set(opinion_ids)
            if not topics and (opinion_ids or new_opinions):
                raise InvalidOperationError("off-topic labels cannot carry opinions")
            for spec in new_opinions:
                statement, op_topics = spec[0], set(spec[1])
                conspiracy = bool(spec[2]) if len(spec) > 2 else False
                existing = self.find_opinion_by_statement(statement)
                if existing is None:
                    new_id = self._next_opinion_id()
                    existing = self.add_opinion(new_id, statement, op_topics, conspiracy)
                opinion_ids.add(existing.id)
            delta = 0
            for tid in topics:
                delta += self.assert_triple(posting_id, "about_topic", tid)
            for oid in opinion_ids:
                op = self.opinion(oid)
                if not op.active:
                    raise InvalidOperationError(f"opinion {oid!r} is not active")
                delta += self.assert_triple(posting_id, "expresses_opinion", oid)
            if posting.label_state != "test-reserved":
                posting.label_state = "labeled"
                if source_batch is not None:
                    posting.source_batch = source_batch
            return delta

    def _next_opinion_id(self) -> str:
        i = len(self._opinions)
        while f"op-{i:05d}" in self._opinions:
            i += 1
        return f"op-{i:05d}"

    def create_opinion(self, statement, topic_ids, conspiracy=False) -> Opinion:
        """Add an opinion with an allocated id; reuse by statement is the
        caller's choice (see find_opinion_by_statement)."""
        with self._lock:
            return self.add_opinion(self._next_opinion_id(), statement,
                                    topic_ids, conspiracy)

    def mark_test_reserved(self, posting_ids):
        with self._lock:
            for pid in posting_ids:
                self.posting(pid).label_state = "test-reserved"

    def topic_label_sets(self) -> dict[str, set[str]]:
        """topic id -> labeled postings about it (explicit or via opinions)."""
        sets: dict[str, set[str]] = {tid: set() for tid in self._topics}
        for s, p, o in self._triples:
            if p == "about_topic":
                sets[o].add(s)
            elif p == "expresses_opinion":
                for tid in self._opinions[o].topic_ids:
                    sets[tid].add(s)
        return sets

    def opinion_label_sets(self) -> dict[str, set[str]]:
        sets: dict[str, set[str]] = {}
        for s, p, o in self._triples:
            if p == "expresses_opinion":
                sets.setdefault(o, set()).add(s)
        return sets

    def training_ids(self) -> list[str]:
        """Labeled postings eligible for training; never test-reserved ones."""
        return [pid for pid in self.posting_ids("labeled")]

    def export_label_matrix(self) -> str:
        """Posting x active-opinion binary matrix, TSV with a header row."""
        opinions = [o.id for o in self.opinions(active_only=True)]
        expressed = self.opinion_label_sets()
        lines = ["posting_id\t" + "\t".join(opinions)]
        for pid in self.posting_ids("labeled"):
            row = [pid] + ["1" if pid in expressed.get(oid, ()) else "0" for oid in opinions]
            lines.append("\t".join(row))
        return "\n".join(lines) + "\n"

    # -- opinion lifecycle ----------------------------------------------------

    def merge_opinions(self, keep_id, absorb_id) -> Opinion:
        """Rewrite all posting links of absorb onto keep; absorb goes inactive."""
        with self._lock:
            if keep_id == absorb_id:
                raise InvalidOperationError("cannot merge an opinion into itself")
            keep, absorb = self.opinion(keep_id), self.opinion(absorb_id)
            if not keep.active or not absorb.active:
                raise InvalidOperationError("both opinions must be active to merge")
            for s, p, o in list(self._triples):
                if p == "expresses_opinion" and o == absorb_id:
                    self._triples.discard((s, p, o))
                    self._triples.add((s, p, keep_id))
            for tid in absorb.topic_ids:
                self._triples.add((keep_id, "opinion_of_topic", tid))
                keep.topic_ids.add(tid)
            for tid in list(absorb.topic_ids):
                self._triples.discard((absorb_id, "opinion_of_topic", tid))
            absorb.status = STATUS_MERGED
            absorb.merged_into = keep_id
            return keep

    def split_opinion(self, source_id, parts) -> list[Opinion]:
        """Replace one opinion with several new ones, keeping provenance.

        parts: iterable of (opinion_id, statement, topic_ids). Posting links
        of the source are copied to every part.
        """
        with self._lock:
            source = self.opinion(source_id)
            if not source.active:
                raise InvalidOperationError(f"opinion {source_id!r} is not active")
            created = []
            for part_id, statement, topic_ids in parts:
                created.append(self.add_opinion(part_id, statement, topic_ids))
            if not created:
                raise InvalidOperationError("split requires at least one part")
            links = [t for t in self._triples if t[1] == "expresses_opinion" and t[2] == source_id]
            for s, p, _ in links:
                self._triples.discard((s, p, source_id))
                for part in created:
                    self._triples.add((s, p, part.id))
            for tid in list(source.topic_ids):
                self._triples.discard((source_id, "opinion_of_topic", tid))
            source.status = STATUS_SPLIT
            source.split_into = tuple(p.id for p in created)
            return created

    # -- ingestion ------------------------------------------------------------

    def ingest_postings(self, records, topic_keywords) -> IngestReport:
        """Persist posting records; tag keyword matches per topic group.

        records: iterable of (record_dict, error) pairs as produced by
        read_posting_records, or plain dicts. Keyword matching is
        case-insensitive whole-token-sequence matching after tokenization.
        """
        report = IngestReport(per_topic={tid: 0 for tid in topic_keywords})
        sequences = {tid: _keyword_token_sequences(kws) for tid, kws in topic_keywords.items()}
        with self._lock:
            for item in records:
                record, error = item if isinstance(item, tuple) else (item, None)
                if error is not None:
                    report.errors.append(error)
                    continue
                try:
                    pid = record["id"]
                    text = record["text"]
                    platform = record["platform"]
                    timestamp = parse_timestamp(record["timestamp_iso8601"])
                except (KeyError, TypeError, ValueError, AttributeError) as exc:
                    report.errors.append(f"malformed record: {exc!r}")
                    continue
                if platform not in PLATFORMS:
                    report.errors.append(f"record {pid!r}: unknown platform {platform!r}")
                    continue
                if pid in self._postings:
                    report.skipped_duplicates += 1
                    continue
                place = record.get("place") or None
                if place is not None and place not in self._places:
                    self.add_place(place, platform, str(place))
                self.add_posting(pid, text, platform, timestamp, place_id=place)
                if place is not None:
                    self._triples.add((pid, "posted_in", place))
                tokens = tokenize(text)
                matched = False
                for tid, seqs in sequences.items():
                    if any(_contains_sequence(tokens, seq) for seq in seqs):
                        report.per_topic[tid] += 1
                        matched = True
                if not matched:
                    report.off_keyword += 1
                report.ingested += 1
        return report

    # -- persistence ------------------------------------------------------------

    def _entity_records(self):
        for t in self.topics():
            yield {"kind": "topic", "id": t.id, "name": t.name,
                   "keywords": sorted(t.keywords)}
        for o in self.opinions():
            yield {"kind": "opinion", "id": o.id, "statement": o.statement,
                   "topic_ids": sorted(o.topic_ids), "conspiracy": o.conspiracy,
                   "status": o.status, "merged_into": o.merged_into,
                   "split_into": list(o.split_into)}
        for pl in sorted(self._places.values(), key=lambda p: p.id):
            yield {"kind": "place", "id": pl.id, "platform": pl.platform,
                   "url_or_handle": pl.url_or_handle}
        for p in self.postings():
            yield {"kind": "posting", "id": p.id, "text": p.text,
                   "platform": p.platform, "place": p.place_id,
                   "timestamp_iso8601": p.timestamp.isoformat(),
                   "label_state": p.label_state, "source_batch": p.source_batch}
        for s, pr, o in sorted(self._triples):
            yield {"kind": "triple", "s": s, "p": pr, "o": o}

    def canonical_export(self) -> str:
        lines = [json.dumps(r, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
                 for r in self._entity_records()]
        return "\n".join(lines) + "\n"

    def export_triples_tsv(self) -> str:
        return "".join(f"{s}\t{p}\t{o}\n" for s, p, o in sorted(self._triples))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.canonical_export())

    @classmethod
    def load(cls, path) -> "OntologyStore":
        store = cls()
        with open(path, encoding="utf-8") as fh:
            records = [json.loads(line) for line in fh if line.strip()]
        for r in records:
            kind = r["kind"]
            if kind == "topic":
                store._topics[r["id"]] = Topic(r["id"], r["name"], frozenset(r["keywords"]))
            elif kind == "opinion":
                store._opinions[r["id"]] = Opinion(
                    r["id"], r["statement"], set(r["topic_ids"]), r["conspiracy"],
                    r["status"], r.get("merged_into"), tuple(r.get("split_into", ())))
            elif kind == "place":
                store._places[r["id"]] = InternetPlace(r["id"], r["platform"], r["url_or_handle"])
            elif kind == "posting":
                store._postings[r["id"]] = Posting(
                    r["id"], r["text"], r["platform"], parse_timestamp(r["timestamp_iso8601"]),
                    r.get("place"), r["label_state"], r.get("source_batch"))
            elif kind == "triple":
                store._triples.add((r["s"], r["p"], r["o"]))
            else:
                raise ValueError(f"unknown record kind {kind!r}")
        return store
