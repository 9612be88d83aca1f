"""Naive reference implementations used only to verify the real ones.

Everything here trades speed for obviousness: full scans, explicit path
enumeration, exact rational arithmetic. None of it shares code with the
package under test.
"""

from __future__ import annotations

import itertools
import math
import re
from collections import Counter
from fractions import Fraction


# ---------------------------------------------------------------------------
# TF-IDF


def naive_tokens(text):
    return re.findall(r"[^\W_]+", text.lower(), re.UNICODE)


def naive_terms(text, lo, hi):
    toks = naive_tokens(text)
    result = []
    for n in range(lo, hi + 1):
        for i in range(len(toks) - n + 1):
            result.append(" ".join(toks[i : i + n]))
    return result


def naive_vocabulary(corpus, min_df, lo, hi):
    """Sorted list of (term, df) with df >= min_df, counted per term over
    each document's term list."""
    doc_terms = [naive_terms(doc, lo, hi) for doc in corpus]
    all_terms = sorted({t for terms in doc_terms for t in terms})
    out = []
    for term in all_terms:
        df = sum(1 for terms in doc_terms if term in terms)
        if df >= min_df:
            out.append((term, df))
    return out


def naive_tfidf_weights(doc, vocab_with_df, n_corpus, lo, hi):
    """Dense {term: weight} map per the stated formula, L2-normalized."""
    counts = Counter(naive_terms(doc, lo, hi))
    raw = {}
    for term, df in vocab_with_df:
        tf = counts.get(term, 0)
        if tf:
            raw[term] = tf * (math.log((1 + n_corpus) / (1 + df)) + 1.0)
    norm = math.sqrt(sum(w * w for w in raw.values()))
    if norm == 0:
        return {}
    return {t: w / norm for t, w in raw.items()}


def naive_tfidf(doc, corpus, min_df, lo, hi):
    vocab = naive_vocabulary(corpus, min_df, lo, hi)
    return naive_tfidf_weights(doc, vocab, len(corpus), lo, hi)


# ---------------------------------------------------------------------------
# Training loss via central finite differences


def finite_difference_gradient(loss_fn, weights, bias, eps=1e-6):
    """Central differences of loss_fn(weights, bias) in every coordinate."""
    import numpy as np

    grad_w = np.zeros_like(weights)
    for j in range(len(weights)):
        wp, wm = weights.copy(), weights.copy()
        wp[j] += eps
        wm[j] -= eps
        grad_w[j] = (loss_fn(wp, bias) - loss_fn(wm, bias)) / (2 * eps)
    grad_b = (loss_fn(weights, bias + eps) - loss_fn(weights, bias - eps)) / (2 * eps)
    return grad_w, grad_b


# ---------------------------------------------------------------------------
# Sampling


def full_sort_active(scores, k):
    """Top-k ids by uncertainty 1 - max(p, 1-p); ties by ascending id."""
    ranked = sorted(scores.items(), key=lambda kv: (-(1 - max(kv[1], 1 - kv[1])), kv[0]))
    return [pid for pid, _ in ranked[:k]]


def full_sort_top_confidence(scores, k):
    """Top-k predicted-positive ids by p, filled from best negatives."""
    pos = sorted((pid for pid, p in scores.items() if p >= 0.5),
                 key=lambda pid: (-scores[pid], pid))
    if len(pos) >= k:
        return pos[:k]
    neg = sorted((pid for pid, p in scores.items() if p < 0.5),
                 key=lambda pid: (-scores[pid], pid))
    return pos + neg[: k - len(pos)]


# ---------------------------------------------------------------------------
# Co-occurrence networks


def brute_force_edges(posting_opinions):
    """Edge weights by quadratic pair enumeration over posting opinion sets."""
    weights = Counter()
    for opinions in posting_opinions:
        for a, b in itertools.combinations(sorted(set(opinions)), 2):
            weights[(a, b)] += 1
    return dict(weights)


def _all_shortest_paths(nodes, edges, source, target):
    """Every shortest path between two nodes, by exhaustive BFS enumeration."""
    adjacency = {v: set() for v in nodes}
    for a, b in edges:
        adjacency[a].add(b)
        adjacency[b].add(a)
    best = None
    paths = []
    frontier = [[source]]
    while frontier and best is None or frontier and len(frontier[0]) <= best:
        next_frontier = []
        for path in frontier:
            if path[-1] == target:
                if best is None:
                    best = len(path)
                if len(path) == best:
                    paths.append(path)
                continue
            for nxt in adjacency[path[-1]]:
                if nxt not in path:
                    next_frontier.append(path + [nxt])
        frontier = next_frontier
        if best is not None:
            frontier = [p for p in frontier if len(p) <= best]
    return paths


def brute_force_centrality(nodes, edges):
    """Degree, harmonic closeness, betweenness by explicit path enumeration.

    Exact rational arithmetic throughout; values converted to float at the
    end, mirroring the normalizations (n-1), (n-1) and (n-1)(n-2)/2.
    """
    nodes = sorted(nodes)
    n = len(nodes)
    degree = {v: 0 for v in nodes}
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    if n < 2:
        zero = {v: 0.0 for v in nodes}
        return {"degree": dict(zero), "closeness": dict(zero), "betweenness": dict(zero)}

    closeness = {}
    betweenness = {v: Fraction(0) for v in nodes}
    for v in nodes:
        acc = Fraction(0)
        for u in nodes:
            if u == v:
                continue
            paths = _all_shortest_paths(nodes, edges, v, u)
            if paths:
                acc += Fraction(1, len(paths[0]) - 1)
        closeness[v] = float(acc / (n - 1))

    for s, t in itertools.combinations(nodes, 2):
        paths = _all_shortest_paths(nodes, edges, s, t)
        if not paths:
            continue
        sigma = len(paths)
        through = Counter()
        for path in paths:
            for v in path[1:-1]:
                through[v] += 1
        for v, cnt in through.items():
            betweenness[v] += Fraction(cnt, sigma)

    if n > 2:
        pair_count = Fraction((n - 1) * (n - 2), 2)
        bc = {v: float(betweenness[v] / pair_count) for v in nodes}
    else:
        bc = {v: 0.0 for v in nodes}
    return {
        "degree": {v: float(Fraction(degree[v], n - 1)) for v in nodes},
        "closeness": closeness,
        "betweenness": bc,
    }
