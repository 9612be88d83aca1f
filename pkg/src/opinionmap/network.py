"""Opinion frequency distributions and daily co-occurrence networks.

Nodes are opinions; an edge exists when two opinions appear together in at
least one posting and is weighted by the number of such postings. Centrality
(degree, harmonic closeness, betweenness) is computed on the unweighted
existence graph with exact rational arithmetic, converted to float on output,
so results are reproducible bit-for-bit and disconnected days are well
defined.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from datetime import date
from fractions import Fraction

CENTRALITY_MEASURES = ("degree", "closeness", "betweenness")


@dataclass(frozen=True)
class OpinionRelation:
    posting_id: str
    opinion_id: str
    day: date


def parse_relations(lines) -> list[OpinionRelation]:
    """Tab-separated posting_id / opinion_id / ISO date, one per line."""
    out = []
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        posting_id, opinion_id, day = line.split("\t")
        out.append(OpinionRelation(posting_id, opinion_id, date.fromisoformat(day)))
    return sorted(set(out), key=lambda r: (r.day, r.posting_id, r.opinion_id))


def relations_from_store(store) -> list[OpinionRelation]:
    """Posting-opinion relations from expresses_opinion triples."""
    out = []
    for pid, _, oid in store.query(None, "expresses_opinion", None):
        out.append(OpinionRelation(pid, oid, store.posting(pid).timestamp.date()))
    return sorted(set(out), key=lambda r: (r.day, r.posting_id, r.opinion_id))


def _in_window(day: date, window) -> bool:
    if window is None:
        return True
    start, end = window
    return (start is None or day >= start) and (end is None or day <= end)


def frequency_distribution(relations, window=None) -> list[tuple[str, int]]:
    """Relation counts per opinion, descending; ties by opinion id."""
    counts: dict[str, int] = {}
    for rel in relations:
        if _in_window(rel.day, window):
            counts[rel.opinion_id] = counts.get(rel.opinion_id, 0) + 1
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


@dataclass
class NetworkSnapshot:
    window: tuple[date | None, date | None]
    nodes: list[str]
    edges: dict[tuple[str, str], int] = field(default_factory=dict)

    def neighbors(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {v: set() for v in self.nodes}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def weight(self, a: str, b: str) -> int:
        return self.edges.get((min(a, b), max(a, b)), 0)

    def total_weight(self) -> int:
        return sum(self.edges.values())


def build_snapshot(relations, window=None) -> NetworkSnapshot:
    """Pairwise co-occurrence counts over postings inside the window."""
    by_posting: dict[str, set[str]] = {}
    nodes: set[str] = set()
    for rel in relations:
        if _in_window(rel.day, window):
            by_posting.setdefault(rel.posting_id, set()).add(rel.opinion_id)
            nodes.add(rel.opinion_id)
    edges: dict[tuple[str, str], int] = {}
    for opinions in by_posting.values():
        members = sorted(opinions)
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                key = (members[i], members[j])
                edges[key] = edges.get(key, 0) + 1
    if window is None:
        days = [r.day for r in relations]
        window = (min(days), max(days)) if days else (None, None)
    return NetworkSnapshot(window, sorted(nodes), edges)


def daily_snapshots(relations) -> dict[date, NetworkSnapshot]:
    days = sorted({r.day for r in relations})
    return {d: build_snapshot(relations, (d, d)) for d in days}


def edge_weight_proportions(snapshots: dict[date, NetworkSnapshot]):
    """Per-day edge weight shares; all values of a non-empty day sum to 1."""
    out: dict[date, dict[tuple[str, str], float]] = {}
    for day in sorted(snapshots):
        snap = snapshots[day]
        total = snap.total_weight()
        if total == 0:
            out[day] = {}
            continue
        out[day] = {e: w / total for e, w in sorted(snap.edges.items())}
    return out


# ---------------------------------------------------------------------------
# Centrality (unweighted existence graph, exact arithmetic)


def _bfs(adj, source):
    """Distances, BFS order and shortest-path counts/predecessors."""
    dist = {source: 0}
    sigma = {source: 1}
    preds: dict[str, list[str]] = {source: []}
    order = []
    queue = deque([source])
    while queue:
        v = queue.popleft()
        order.append(v)
        for w in sorted(adj[v]):
            if w not in dist:
                dist[w] = dist[v] + 1
                sigma[w] = 0
                preds[w] = []
                queue.append(w)
            if dist[w] == dist[v] + 1:
                sigma[w] += sigma[v]
                preds[w].append(v)
    return dist, order, sigma, preds


def centrality(snapshot: NetworkSnapshot) -> dict[str, dict[str, float]]:
    """Degree, harmonic closeness and betweenness per node.

    Degree is normalized by (n-1), harmonic closeness sums reciprocal
    distances normalized by (n-1), betweenness accumulates Brandes pair
    dependencies normalized by (n-1)(n-2)/2. Graphs with n < 2 get zeros.
    """
    nodes = snapshot.nodes
    n = len(nodes)
    if n < 2:
        zeros = {v: 0.0 for v in nodes}
        return {m: dict(zeros) for m in CENTRALITY_MEASURES}
    adj = snapshot.neighbors()
    degree = {v: float(Fraction(len(adj[v]), n - 1)) for v in nodes}

    closeness: dict[str, float] = {}
    betweenness: dict[str, Fraction] = {v: Fraction(0) for v in nodes}
    for s in nodes:
        dist, order, sigma, preds = _bfs(adj, s)
        closeness[s] = float(
            sum((Fraction(1, d) for v, d in dist.items() if d > 0), Fraction(0))
            / (n - 1)
        )
        # Brandes back-propagation of pair dependencies
        delta = {v: Fraction(0) for v in dist}
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += Fraction(sigma[v], sigma[w]) * (1 + delta[w])
            if w != s:
                betweenness[w] += delta[w]
    if n > 2:
        pair_count = Fraction((n - 1) * (n - 2), 2)
        # each unordered pair was counted from both endpoints
        bc = {v: float(b / 2 / pair_count) for v, b in betweenness.items()}
    else:
        bc = {v: 0.0 for v in nodes}
    return {"degree": degree, "closeness": closeness, "betweenness": bc}


def group_centrality_series(
    snapshots: dict[date, NetworkSnapshot],
    conspiracy_flags: dict[str, bool],
) -> list[dict]:
    """Per-day mean centrality for the conspiracy and non-conspiracy groups.

    Only opinions present in a day's network enter that day's mean; a group
    absent on a day yields None for its measures.
    """
    rows = []
    for day in sorted(snapshots):
        cent = centrality(snapshots[day])
        for group, flag in (("conspiracy", True), ("non-conspiracy", False)):
            members = [v for v in snapshots[day].nodes
                       if conspiracy_flags.get(v, False) == flag]
            row = {"day": day, "group": group, "n": len(members)}
            for measure in CENTRALITY_MEASURES:
                if members:
                    row[measure] = sum(cent[measure][v] for v in members) / len(members)
                else:
                    row[measure] = None
            rows.append(row)
    return rows


def read_daily_ratios(lines) -> dict[date, float]:
    """date,value CSV of daily coverage ratios; values must lie in [0, 1]."""
    out: dict[date, float] = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("date"):
            continue
        day_text, value_text = line.split(",")
        value = float(value_text)
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"row {lineno}: ratio {value} outside [0, 1]")
        out[date.fromisoformat(day_text)] = value
    return out


def overlay_series(series_rows: list[dict], ratios: dict[date, float]) -> list[dict]:
    """Date-aligned join of centrality rows with a daily ratio; gaps stay None."""
    out = []
    for row in series_rows:
        joined = dict(row)
        joined["news_ratio"] = ratios.get(row["day"])
        out.append(joined)
    return out


def export_snapshot_map(snapshot: NetworkSnapshot,
                        conspiracy_flags: dict[str, bool] | None = None) -> str:
    """Node-link JSON with size/color attributes (degree, betweenness)."""
    cent = centrality(snapshot)
    flags = conspiracy_flags or {}
    doc = {
        "window": [d.isoformat() if d else None for d in snapshot.window],
        "nodes": [
            {
                "id": v,
                "degree": cent["degree"][v],
                "betweenness": cent["betweenness"][v],
                "conspiracy": bool(flags.get(v, False)),
            }
            for v in snapshot.nodes
        ],
        "links": [
            {"source": a, "target": b, "weight": w}
            for (a, b), w in sorted(snapshot.edges.items())
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def series_csv(rows_by_day: dict[date, dict], value_name="value") -> str:
    """Generic (date, key, value) CSV emitter for proportions and series."""
    lines = [f"date,key,{value_name}"]
    for day in sorted(rows_by_day):
        for key, value in sorted(rows_by_day[day].items()):
            key_text = "|".join(key) if isinstance(key, tuple) else str(key)
            lines.append(f"{day.isoformat()},{key_text},{value!r}")
    return "\n".join(lines) + "\n"


def centrality_csv(snapshots: dict[date, NetworkSnapshot]) -> str:
    """Per-day per-node centrality rows: date,opinion,measure,value."""
    lines = ["date,opinion,measure,value"]
    for day in sorted(snapshots):
        cent = centrality(snapshots[day])
        for measure in CENTRALITY_MEASURES:
            for node in snapshots[day].nodes:
                lines.append(f"{day.isoformat()},{node},{measure},{cent[measure][node]!r}")
    return "\n".join(lines) + "\n"
