"""Opinion co-occurrence networks
================================

From posting-opinion relations to daily networks: frequency distributions,
edge-weight proportions over time, centrality dynamics split by conspiracy
flag, and a node-link export for mapping tools. The fixture plants a
conspiracy opinion that sits at the hub of the conversation until a burst
of news coverage crowds it out.
"""

import json
from datetime import date, timedelta

import numpy as np

from opinionmap import (
    build_snapshot,
    centrality,
    daily_snapshots,
    edge_weight_proportions,
    export_snapshot_map,
    frequency_distribution,
    group_centrality_series,
    overlay_series,
)
from opinionmap.network import OpinionRelation

rng = np.random.default_rng(3)
DAY0 = date(2019, 9, 20)

OPINIONS = {
    "o-unhoax": True,     # conspiracy-flagged (curated data, never inferred)
    "o-arson": True,
    "o-notreal": False,
    "o-backburn": False,
    "o-greens": False,
}
SPIKE_DAY = DAY0 + timedelta(days=6)

relations = []
pid = 0
for d in range(10):
    day = DAY0 + timedelta(days=d)
    hub = "o-notreal" if day >= SPIKE_DAY else "o-unhoax"
    others = [o for o in OPINIONS if o != hub]
    for _ in range(30):
        partner = others[int(rng.integers(len(others)))]
        for o in (hub, partner):
            relations.append(OpinionRelation(f"p{pid:05d}", o, day))
        pid += 1

print("opinion frequency distribution (relation counts, descending):")
for opinion, count in frequency_distribution(relations):
    flag = " [conspiracy]" if OPINIONS[opinion] else ""
    print(f"  {opinion}: {count}{flag}")

dailies = daily_snapshots(relations)
proportions = edge_weight_proportions(dailies)
first_day = sorted(proportions)[0]
print(f"\nedge-weight proportions on {first_day} (sum to 1):")
for edge, share in sorted(proportions[first_day].items(), key=lambda kv: -kv[1]):
    print(f"  {edge[0]} -- {edge[1]}: {share:.3f}")

series = group_centrality_series(dailies, OPINIONS)
ratios = {DAY0 + timedelta(days=d): (0.65 if DAY0 + timedelta(days=d) >= SPIKE_DAY
                                     else 0.1) for d in range(10)}
joined = overlay_series(series, ratios)
print("\nmean betweenness by group, with the news coverage ratio overlaid:")
print("day         conspiracy  non-conspiracy  news-ratio")
for row in joined:
    if row["group"] == "conspiracy":
        partner = next(r for r in joined
                       if r["day"] == row["day"] and r["group"] == "non-conspiracy")
        print(f"{row['day']}  {row['betweenness']:.4f}      "
              f"{partner['betweenness']:.4f}          {row['news_ratio']}")

window = (SPIKE_DAY - timedelta(days=3), SPIKE_DAY + timedelta(days=3))
snapshot = build_snapshot(relations, window)
cent = centrality(snapshot)
print(f"\nwindowed snapshot {window[0]}..{window[1]}: "
      f"{len(snapshot.nodes)} nodes, {len(snapshot.edges)} edges")
print("most-between node:", max(cent["betweenness"], key=cent["betweenness"].get))

doc = json.loads(export_snapshot_map(snapshot, OPINIONS))
print(f"node-link export carries {len(doc['nodes'])} nodes with degree, "
      f"betweenness and conspiracy attributes")
