"""Deterministic store fixtures shaped like the study's reported statistics.

The builder reconstructs the labeled-dataset shape at the initial round and
after the final augmentation round: per-topic posting counts, explicit
off-topic labels, and per-topic opinion counts with the documented unique
totals. Contents are synthetic; only the shape matches.
"""

from __future__ import annotations

import heapq
from datetime import datetime, timezone

from opinionmap.store import OntologyStore

TOPICS = ["bushfires", "climate-change", "covid-19", "vaccination"]

# (topic -> count) tables: postings then opinions, initial round and final.
L0_POSTS = {"bushfires": 189, "climate-change": 387, "covid-19": 263, "vaccination": 220}
L7_POSTS = {"bushfires": 287, "climate-change": 592, "covid-19": 477, "vaccination": 335}
L0_OFFTOPIC = 0
L7_OFFTOPIC = 480
L0_UNIQUE = 614
L7_UNIQUE = 1381
L0_OPINIONS = {"bushfires": 16, "climate-change": 31, "covid-19": 29, "vaccination": 22}
L7_OPINIONS = {"bushfires": 16, "climate-change": 33, "covid-19": 34, "vaccination": 26}
L0_OPINIONS_UNIQUE = 65
L7_OPINIONS_UNIQUE = 71


def _membership_sets(counts: dict[str, int], n_postings: int) -> list[list[str]]:
    """Assign each posting 1..k topics so per-topic totals match exactly.

    Greedy: repeatedly give the posting with capacity the topic with the
    largest remainder; postings sized as evenly as the totals allow.
    """
    total = sum(counts.values())
    assert total >= n_postings
    sizes = [1] * n_postings
    extra = total - n_postings
    i = 0
    while extra > 0:
        if sizes[i] < len(counts):
            sizes[i] += 1
            extra -= 1
        i = (i + 1) % n_postings
    heap = [(-c, t) for t, c in counts.items() if c > 0]
    heapq.heapify(heap)
    memberships = []
    for size in sorted(sizes, reverse=True):
        picked = []
        for _ in range(size):
            c, t = heapq.heappop(heap)
            picked.append((c, t))
        memberships.append(sorted(t for _, t in picked))
        for c, t in picked:
            if c + 1 < 0:
                heapq.heappush(heap, (c + 1, t))
    assert not heap
    return memberships


def _opinion_memberships():
    """Topic sets for 71 opinions; the first 65 exist from the initial round."""
    initial = (
        [["bushfires"]] * 4
        + [["climate-change"]] * 19
        + [["bushfires", "climate-change"]] * 12
        + [["covid-19"]] * 8
        + [["vaccination"]] * 1
        + [["covid-19", "vaccination"]] * 21
    )
    late = (
        [["covid-19", "vaccination"]] * 4
        + [["climate-change", "covid-19"]] * 1
        + [["climate-change"]] * 1
    )
    return initial, late


def build_paper_shaped_store(final_round: bool = True) -> OntologyStore:
    store = OntologyStore()
    for tid in TOPICS:
        store.add_topic(tid, tid.replace("-", " "))

    initial_ops, late_ops = _opinion_memberships()
    all_ops = initial_ops + late_ops if final_round else initial_ops
    conspiracy_stride = 4  # arbitrary sprinkling of curated flags
    for i, topics in enumerate(all_ops):
        store.add_opinion(
            f"op-{i:03d}", f"synthetic opinion statement {i}", topics,
            conspiracy=(i % conspiracy_stride == 0),
        )

    posts = L7_POSTS if final_round else L0_POSTS
    unique = L7_UNIQUE if final_round else L0_UNIQUE
    offtopic = L7_OFFTOPIC if final_round else L0_OFFTOPIC
    on_topic = unique - offtopic
    memberships = _membership_sets(posts, on_topic)

    opinions_by_topicset: dict[tuple, list[str]] = {}
    for i, topics in enumerate(all_ops):
        opinions_by_topicset.setdefault(tuple(topics), []).append(f"op-{i:03d}")

    ts = datetime(2019, 9, 1, tzinfo=timezone.utc)
    for i, topics in enumerate(memberships):
        pid = f"post-{i:05d}"
        store.add_posting(pid, f"synthetic posting {i} about {' '.join(topics)}",
                          "facebook", ts)
        # attach one matching opinion where some opinion's topics are covered
        opinion_ids = []
        key = tuple(topics)
        if key in opinions_by_topicset:
            pool = opinions_by_topicset[key]
            opinion_ids = [pool[i % len(pool)]]
        store.label_posting(pid, topics, opinion_ids)
    for j in range(offtopic):
        pid = f"post-off-{j:05d}"
        store.add_posting(pid, f"synthetic off topic chatter {j}", "facebook", ts)
        store.label_posting(pid, [])
    return store
