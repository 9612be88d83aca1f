"""Per-iteration selection of unlabeled postings with three strategies.

Each topic draws an active-learning partition (highest uncertainty), a
top-confidence partition (strongest predicted positives) and a uniform
random partition, deduplicated within the topic in that priority order.
The same posting may still be selected by several topics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classifiers import Prediction

DEFAULT_ACTIVE = 10
DEFAULT_TOP_CONFIDENCE = 10
DEFAULT_RANDOM = 5

STRATEGIES = ("active", "top_confidence", "random")


def uncertainty(prediction: Prediction) -> float:
    """1 - p(predicted label | x); maximal 0.5 at the decision boundary."""
    return 1.0 - prediction.confidence


def sample_active(pool: list[Prediction], k: int = DEFAULT_ACTIVE,
                  exclude: set[str] = frozenset()) -> list[str]:
    """The k most uncertain posting ids; ties broken by ascending id."""
    ranked = sorted(
        (p for p in pool if p.posting_id not in exclude),
        key=lambda p: (-uncertainty(p), p.posting_id),
    )
    return [p.posting_id for p in ranked[:k]]


def sample_top_confidence(pool: list[Prediction], k: int = DEFAULT_TOP_CONFIDENCE,
                          exclude: set[str] = frozenset()) -> tuple[list[str], bool]:
    """The k strongest predicted positives by p; negatives fill a shortfall.

    Returns (ids, filled_from_negatives).
    """
    eligible = [p for p in pool if p.posting_id not in exclude]
    positives = sorted(
        (p for p in eligible if p.label == 1),
        key=lambda p: (-p.p_positive, p.posting_id),
    )
    picked = [p.posting_id for p in positives[:k]]
    filled = False
    if len(picked) < k:
        negatives = sorted(
            (p for p in eligible if p.label == 0),
            key=lambda p: (-p.p_positive, p.posting_id),
        )
        fill = [p.posting_id for p in negatives[: k - len(picked)]]
        filled = bool(fill)
        picked.extend(fill)
    return picked, filled


def sample_random(pool_ids: list[str], k: int, rng: np.random.Generator,
                  exclude: set[str] = frozenset()) -> list[str]:
    """Uniform without replacement over the (sorted) id pool; reproducible."""
    candidates = sorted(set(pool_ids) - set(exclude))
    if len(candidates) <= k:
        return candidates
    picked = rng.choice(len(candidates), size=k, replace=False)
    return [candidates[i] for i in sorted(picked)]


@dataclass
class TopicPartition:
    active: list[str] = field(default_factory=list)
    top_confidence: list[str] = field(default_factory=list)
    random: list[str] = field(default_factory=list)
    # (strategy, posting_id) -> selection score, for the manifest export
    scores: dict[tuple[str, str], float] = field(default_factory=dict, repr=False)

    def all_ids(self) -> list[str]:
        return self.active + self.top_confidence + self.random

    def __len__(self) -> int:
        return len(self.active) + len(self.top_confidence) + len(self.random)


@dataclass
class SampleBatch:
    iteration: int
    seed: int
    per_topic: dict[str, TopicPartition]
    flags: list[str] = field(default_factory=list)

    def total_selections(self) -> int:
        return sum(len(p) for p in self.per_topic.values())

    def selected_posting_ids(self) -> set[str]:
        out: set[str] = set()
        for part in self.per_topic.values():
            out.update(part.all_ids())
        return out

    def manifest_rows(self) -> list[tuple]:
        """(iteration, topic, strategy, posting_id, score) rows, manifest order."""
        rows = []
        for tid in sorted(self.per_topic):
            part = self.per_topic[tid]
            for strategy in STRATEGIES:
                for pid in getattr(part, strategy):
                    score = part.scores.get((strategy, pid), "")
                    rows.append((self.iteration, tid, strategy, pid, score))
        return rows

    def manifest_tsv(self) -> str:
        lines = ["iteration\ttopic\tstrategy\tposting_id\tscore"]
        for row in self.manifest_rows():
            lines.append("\t".join(str(v) for v in row))
        return "\n".join(lines) + "\n"


def compose_batch(
    per_topic_pools: dict[str, list[Prediction]],
    iteration: int,
    seed: int,
    k_active: int = DEFAULT_ACTIVE,
    k_top_confidence: int = DEFAULT_TOP_CONFIDENCE,
    k_random: int = DEFAULT_RANDOM,
    exclude: set[str] = frozenset(),
) -> SampleBatch:
    """Compose one iteration's batch from per-topic scored pools.

    Within a topic the partitions are disjoint (priority: active, then
    top-confidence, then random, refilling from next-ranked candidates);
    postings in `exclude` (labeled or test-reserved) are never selected.
    """
    batch = SampleBatch(iteration, seed, {})
    for tid in sorted(per_topic_pools):
        pool = [p for p in per_topic_pools[tid] if p.posting_id not in exclude]
        part = TopicPartition()
        scores: dict[tuple[str, str], float] = {}
        if not pool:
            batch.flags.append(f"{tid}: empty pool")
            batch.per_topic[tid] = part
            continue
        by_id = {p.posting_id: p for p in pool}
        part.active = sample_active(pool, k_active)
        taken = set(part.active)
        part.top_confidence, filled = sample_top_confidence(pool, k_top_confidence, taken)
        if filled:
            batch.flags.append(f"{tid}: top-confidence filled from negatives")
        taken |= set(part.top_confidence)
        rng = np.random.default_rng([seed, iteration, _topic_digest(tid)])
        part.random = sample_random([p.posting_id for p in pool], k_random, rng, taken)
        for pid in part.active:
            scores[("active", pid)] = round(uncertainty(by_id[pid]), 6)
        for pid in part.top_confidence:
            scores[("top_confidence", pid)] = round(by_id[pid].p_positive, 6)
        part.scores = scores
        want = k_active + k_top_confidence + k_random
        if len(part) < want:
            batch.flags.append(f"{tid}: pool exhausted ({len(part)} of {want})")
        batch.per_topic[tid] = part
    return batch


def _topic_digest(topic_id: str) -> int:
    import hashlib

    return int.from_bytes(hashlib.sha256(topic_id.encode("utf-8")).digest()[:4], "big")
