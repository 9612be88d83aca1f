"""Two-level classification: per-topic binary models gating per-topic
one-vs-rest opinion models.

The native model is L2-regularized logistic regression over TF-IDF features,
trained by full-batch gradient descent so that runs are bit-reproducible.
Anything heavier (transformers, ensembles) plugs in through the external
classifier adapter without changing pipeline behavior.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import issparse

from .features import Vocabulary, to_matrix

MODEL_FORMAT_VERSION = "opinionmap-model v1"


def sigmoid(z):
    z = np.clip(z, -500, 500)
    return 1.0 / (1.0 + np.exp(-z))


def loss(weights, bias, X, y, l2):
    """Mean cross-entropy plus (l2/2)*||w||^2 (bias unpenalized)."""
    p = sigmoid(X @ weights + bias)
    p = np.clip(p, 1e-12, 1 - 1e-12)
    ce = -np.mean(y * np.log(p) + (1 - y) * np.log(1 - p))
    return float(ce + 0.5 * l2 * np.dot(weights, weights))


def gradient(weights, bias, X, y, l2):
    """Analytic gradient of loss() in (weights, bias)."""
    n = X.shape[0]
    residual = sigmoid(X @ weights + bias) - y
    grad_w = (X.T @ residual) / n + l2 * weights
    if issparse(X):
        grad_w = np.asarray(grad_w).ravel()
    return grad_w, float(np.mean(residual))


@dataclass(frozen=True)
class Hyperparameters:
    l2: float = 0.01
    epochs: int = 200
    learning_rate: float = 2.0

    def as_dict(self):
        return {"l2": self.l2, "epochs": self.epochs, "learning_rate": self.learning_rate}


DEFAULT_GRID = ({"l2": 0.01}, {"l2": 0.1}, {"l2": 1.0}, {"l2": 10.0})


def fit_logistic(X, y, hyper: Hyperparameters, seed: int = 0):
    """Full-batch gradient descent from zero init; deterministic given seed.

    The seed is part of the training contract (recorded, reserved for
    stochastic variants); plain GD does not consume it.
    """
    y = np.asarray(y, dtype=float)
    weights = np.zeros(X.shape[1])
    bias = 0.0
    for _ in range(hyper.epochs):
        grad_w, grad_b = gradient(weights, bias, X, y, hyper.l2)
        weights -= hyper.learning_rate * grad_w
        bias -= hyper.learning_rate * grad_b
    return weights, bias


@dataclass(frozen=True)
class Prediction:
    """One binary decision: predicted label and the probability of it."""

    posting_id: str
    label: int
    confidence: float

    def __post_init__(self):
        if not 0.5 <= self.confidence <= 1.0:
            raise ValueError(
                f"confidence {self.confidence} outside [0.5, 1] for {self.posting_id!r}"
            )

    @property
    def p_positive(self) -> float:
        return self.confidence if self.label == 1 else 1.0 - self.confidence

    @property
    def uncertainty(self) -> float:
        return 1.0 - self.confidence


def prediction_from_probability(posting_id: str, p: float) -> Prediction:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1] for {posting_id!r}")
    label = 1 if p >= 0.5 else 0
    return Prediction(posting_id, label, max(p, 1.0 - p))


@dataclass
class TopicClassifier:
    """Binary on-topic/off-topic model for one topic; immutable once trained."""

    topic_id: str
    weights: np.ndarray
    bias: float
    vocab_hash: str
    hyperparameters: Hyperparameters
    trained_on_iteration: int = 0
    seed: int = 0

    def predict_proba(self, X) -> np.ndarray:
        if X.shape[1] != len(self.weights):
            raise ValueError(
                f"feature dimension {X.shape[1]} != model dimension {len(self.weights)}"
            )
        return sigmoid(X @ self.weights + self.bias)

    def predictions(self, posting_ids, X) -> list[Prediction]:
        return [
            prediction_from_probability(pid, float(p))
            for pid, p in zip(posting_ids, self.predict_proba(X))
        ]


def train_topic_classifier(
    topic_id: str,
    X,
    y,
    vocab: Vocabulary,
    hyper: Hyperparameters = Hyperparameters(),
    iteration: int = 0,
    seed: int = 0,
) -> TopicClassifier:
    """Fit the binary topic model; rejects single-class training sets."""
    y = np.asarray(y, dtype=float)
    if y.size == 0 or y.min() == y.max():
        raise ValueError(f"training set for topic {topic_id!r} contains a single class")
    weights, bias = fit_logistic(X, y, hyper, seed)
    return TopicClassifier(topic_id, weights, bias, vocab.content_hash(), hyper, iteration, seed)


def _check_vocab(classifier, vocab: Vocabulary):
    if classifier.vocab_hash != vocab.content_hash():
        raise ValueError(
            f"classifier for {classifier.topic_id!r} was trained on a different vocabulary"
        )


def predict_topics(
    text: str,
    classifiers: dict[str, TopicClassifier],
    vocab: Vocabulary,
) -> tuple[set[str], dict[str, float]]:
    """Independent binary decisions per topic; empty set means off-topic."""
    X = to_matrix([text], vocab)
    probs = {}
    for tid, clf in sorted(classifiers.items()):
        _check_vocab(clf, vocab)
        probs[tid] = float(clf.predict_proba(X)[0])
    labels = {tid for tid, p in probs.items() if p >= 0.5}
    return labels, probs


@dataclass
class OpinionClassifier:
    """One-vs-rest opinion models for a single topic's active opinions."""

    topic_id: str
    members: dict[str, tuple[np.ndarray, float]]
    vocab_hash: str
    threshold: float = 0.5
    hyperparameters: Hyperparameters = Hyperparameters()
    skipped: tuple[str, ...] = ()

    def predict_proba(self, X) -> dict[str, np.ndarray]:
        return {oid: sigmoid(X @ w + b) for oid, (w, b) in sorted(self.members.items())}


def train_opinion_classifier(
    topic_id: str,
    X_topic,
    opinion_labels: dict[str, np.ndarray],
    vocab: Vocabulary,
    hyper: Hyperparameters = Hyperparameters(),
    threshold: float = 0.5,
    seed: int = 0,
) -> OpinionClassifier:
    """One-vs-rest over this topic's opinions, trained on on-topic postings.

    Opinions whose label column is single-class on the given postings are
    recorded in `skipped` and never predicted.
    """
    members = {}
    skipped = []
    for oid, y in sorted(opinion_labels.items()):
        y = np.asarray(y, dtype=float)
        if y.size == 0 or y.min() == y.max():
            skipped.append(oid)
            continue
        members[oid] = fit_logistic(X_topic, y, hyper, seed)
    return OpinionClassifier(topic_id, members, vocab.content_hash(), threshold,
                             hyper, tuple(skipped))


def predict_opinions(
    text: str,
    topic_labels: set[str],
    opinion_classifiers: dict[str, OpinionClassifier],
    vocab: Vocabulary,
) -> dict[str, float]:
    """Opinions of predicted topics with probability >= threshold.

    The hierarchy gate: an off-topic posting (empty topic_labels) yields {}
    without ever invoking an opinion model.
    """
    if not topic_labels:
        return {}
    X = to_matrix([text], vocab)
    emitted: dict[str, float] = {}
    for tid in sorted(topic_labels):
        clf = opinion_classifiers.get(tid)
        if clf is None:
            continue
        _check_vocab(clf, vocab)
        for oid, probs in clf.predict_proba(X).items():
            p = float(probs[0])
            if p >= clf.threshold:
                emitted[oid] = max(p, emitted.get(oid, 0.0))
    return emitted


# ---------------------------------------------------------------------------
# Metrics


@dataclass
class EvalReport:
    per_topic: dict[str, dict[str, float]]
    macro_accuracy: float
    macro_f1: float
    source: str

    def as_dict(self):
        return {
            "per_topic": {t: dict(m) for t, m in sorted(self.per_topic.items())},
            "macro_accuracy": self.macro_accuracy,
            "macro_f1": self.macro_f1,
            "source": self.source,
        }


def accuracy_and_f1(y_true, y_pred) -> tuple[float, float]:
    """Accuracy and positive-class F1; F1 is 0 when the denominator is 0."""
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    accuracy = float(np.mean(y_true == y_pred))
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0
    return accuracy, f1


def make_report(per_topic: dict[str, dict[str, float]], source: str) -> EvalReport:
    topics = sorted(per_topic)
    macro_acc = float(np.mean([per_topic[t]["accuracy"] for t in topics]))
    macro_f1 = float(np.mean([per_topic[t]["f1"] for t in topics]))
    return EvalReport(per_topic, macro_acc, macro_f1, source)


def evaluate(classifiers: dict[str, TopicClassifier], X_test, y_test: dict[str, np.ndarray],
             source: str = "test-set") -> EvalReport:
    if X_test.shape[0] == 0:
        raise ValueError("test set is empty")
    per_topic = {}
    for tid, clf in sorted(classifiers.items()):
        y_pred = (clf.predict_proba(X_test) >= 0.5).astype(int)
        acc, f1 = accuracy_and_f1(y_test[tid], y_pred)
        per_topic[tid] = {"accuracy": acc, "f1": f1}
    return make_report(per_topic, source)


# ---------------------------------------------------------------------------
# Cross-validation


def _stable_int(text: str) -> int:
    """Process-independent 32-bit digest (built-in hash is salted)."""
    import hashlib

    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:4], "big")


def stratified_kfold(y, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Seeded stratified fold assignment: fold index per example.

    Classes with fewer than k members are merged into one remainder stratum
    (with a warning) instead of being stratified.
    """
    y = np.asarray(y)
    folds = np.empty(len(y), dtype=int)
    by_class: dict = {}
    for i, label in enumerate(y):
        by_class.setdefault(label, []).append(i)
    remainder: list[int] = []
    strata = []
    for label in sorted(by_class):
        members = by_class[label]
        if len(members) < k:
            warnings.warn(
                f"class {label!r} has {len(members)} member(s) < {k}; "
                "merged into stratification remainder"
            )
            remainder.extend(members)
        else:
            strata.append(members)
    if remainder:
        strata.append(remainder)
    for members in strata:
        members = np.array(members)
        rng.shuffle(members)
        for pos, idx in enumerate(members):
            folds[idx] = pos % k
    return [np.where(folds == f)[0] for f in range(k)]


def _random_search(X, y, k, rng, grid, budget, base: Hyperparameters) -> Hyperparameters:
    """Inner k-fold random search over the declared grid; best mean F1 wins."""
    if budget <= 0 or not grid:
        return base
    order = rng.permutation(len(grid))[: min(budget, len(grid))]
    candidates = [Hyperparameters(**{**base.as_dict(), **grid[i]}) for i in order]
    best, best_score = base, -1.0
    for cand in candidates:
        folds = stratified_kfold(y, k, rng)
        scores = []
        for f in range(k):
            val_idx = folds[f]
            train_idx = np.concatenate([folds[g] for g in range(k) if g != f])
            if len(set(y[train_idx])) < 2 or len(val_idx) == 0:
                continue
            w, b = fit_logistic(X[train_idx], y[train_idx], cand)
            y_pred = (sigmoid(X[val_idx] @ w + b) >= 0.5).astype(int)
            scores.append(accuracy_and_f1(y[val_idx], y_pred)[1])
        score = float(np.mean(scores)) if scores else -1.0
        if score > best_score:
            best, best_score = cand, score
    return best


def cross_validate(
    X,
    y_per_topic: dict[str, np.ndarray],
    vocab: Vocabulary,
    k: int = 5,
    seed: int = 0,
    hyper: Hyperparameters = Hyperparameters(),
    grid=DEFAULT_GRID,
    search_budget: int = 0,
) -> tuple[EvalReport, dict[str, Hyperparameters]]:
    """Outer k-fold evaluation with optional nested random search per topic.

    Returns the cross-validation report plus the hyperparameters selected
    for each topic (the base ones when search_budget is 0).
    """
    per_topic = {}
    chosen: dict[str, Hyperparameters] = {}
    for tid in sorted(y_per_topic):
        y = np.asarray(y_per_topic[tid], dtype=int)
        rng = np.random.default_rng([seed, _stable_int(tid)])
        folds = stratified_kfold(y, k, rng)
        accs, f1s = [], []
        picks: list[Hyperparameters] = []
        for f in range(k):
            val_idx = folds[f]
            train_idx = np.concatenate([folds[g] for g in range(k) if g != f])
            if len(val_idx) == 0 or len(set(y[train_idx])) < 2:
                continue
            cand = _random_search(X[train_idx], y[train_idx], k, rng, grid,
                                  search_budget, hyper)
            picks.append(cand)
            w, b = fit_logistic(X[train_idx], y[train_idx], cand)
            y_pred = (sigmoid(X[val_idx] @ w + b) >= 0.5).astype(int)
            acc, f1 = accuracy_and_f1(y[val_idx], y_pred)
            accs.append(acc)
            f1s.append(f1)
        per_topic[tid] = {"accuracy": float(np.mean(accs)), "f1": float(np.mean(f1s))}
        # most frequently selected configuration across outer folds
        if picks:
            counts = [(sum(1 for q in picks if q == p), -i) for i, p in enumerate(picks)]
            chosen[tid] = picks[-max(counts)[1]]
        else:
            chosen[tid] = hyper
    return make_report(per_topic, "cross-validation"), chosen


# ---------------------------------------------------------------------------
# External classifier adapter


class AdapterError(Exception):
    """Adapter failure; retryable means the iteration can be re-attempted."""

    def __init__(self, message, retryable=False):
        super().__init__(message)
        self.retryable = retryable


def adapter_predictions(adapter, postings: list[tuple[str, str]]) -> list[Prediction]:
    """Run a pluggable classifier over a batch, enforcing the invariants.

    adapter: object with classify_batch(records) -> [{id, label, probability}].
    Any invariant violation or transport failure yields AdapterError and no
    partial results.
    """
    request = [{"id": pid, "text": text} for pid, text in postings]
    try:
        rows = adapter.classify_batch(request)
    except AdapterError:
        raise
    except Exception as exc:
        raise AdapterError(f"adapter unavailable: {exc}", retryable=True) from exc
    by_id = {}
    for row in rows:
        try:
            pid, label, p = row["id"], int(row["label"]), float(row["probability"])
        except (KeyError, TypeError, ValueError) as exc:
            raise AdapterError(f"malformed adapter response row {row!r}") from exc
        if label not in (0, 1):
            raise AdapterError(f"label {label} outside {{0,1}} for {pid!r}")
        if not 0.0 <= p <= 1.0:
            raise AdapterError(f"probability {p} outside [0, 1] for {pid!r}")
        try:
            # probability is p(predicted label | x), so [0.5, 1] must hold
            by_id[pid] = Prediction(pid, label, p)
        except ValueError as exc:
            raise AdapterError(str(exc)) from exc
    missing = [pid for pid, _ in postings if pid not in by_id]
    if missing:
        raise AdapterError(f"adapter response missing postings {missing[:5]!r}")
    return [by_id[pid] for pid, _ in postings]


class NativeModelAdapter:
    """Adapter echoing a native topic classifier (the equivalence harness)."""

    def __init__(self, classifier: TopicClassifier, vocab: Vocabulary):
        self.classifier = classifier
        self.vocab = vocab

    def classify_batch(self, records):
        X = to_matrix([r["text"] for r in records], self.vocab)
        probs = self.classifier.predict_proba(X)
        return [
            {"id": r["id"], "label": int(p >= 0.5), "probability": float(max(p, 1 - p))}
            for r, p in zip(records, probs)
        ]


class HttpClassifierAdapter:
    """Concrete binding of the adapter protocol over HTTP+JSON."""

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout

    def classify_batch(self, records):
        body = json.dumps({"postings": records}).encode("utf-8")
        request = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise AdapterError(f"adapter endpoint unavailable: {exc}", retryable=True) from exc
        return payload["predictions"]


# ---------------------------------------------------------------------------
# Serialization


def _format_float(x: float) -> str:
    return repr(float(x))


def serialize_topic_classifier(clf: TopicClassifier) -> str:
    h = clf.hyperparameters
    lines = [
        MODEL_FORMAT_VERSION,
        "kind\ttopic",
        f"topic\t{clf.topic_id}",
        f"vocab_hash\t{clf.vocab_hash}",
        f"iteration\t{clf.trained_on_iteration}",
        f"seed\t{clf.seed}",
        f"hyper\tl2={_format_float(h.l2)}\tepochs={h.epochs}\tlr={_format_float(h.learning_rate)}",
        f"bias\t{_format_float(clf.bias)}",
        f"weights\t{len(clf.weights)}",
    ]
    lines.extend(_format_float(w) for w in clf.weights)
    return "\n".join(lines) + "\n"


def serialize_opinion_classifier(clf: OpinionClassifier) -> str:
    h = clf.hyperparameters
    lines = [
        MODEL_FORMAT_VERSION,
        "kind\topinion",
        f"topic\t{clf.topic_id}",
        f"vocab_hash\t{clf.vocab_hash}",
        f"threshold\t{_format_float(clf.threshold)}",
        f"hyper\tl2={_format_float(h.l2)}\tepochs={h.epochs}\tlr={_format_float(h.learning_rate)}",
        "skipped\t" + ",".join(clf.skipped),
        f"members\t{len(clf.members)}",
    ]
    for oid in sorted(clf.members):
        weights, bias = clf.members[oid]
        lines.append(f"member\t{oid}\t{_format_float(bias)}")
        lines.append(" ".join(_format_float(w) for w in weights))
    return "\n".join(lines) + "\n"


def deserialize_opinion_classifier(text: str) -> OpinionClassifier:
    lines = text.splitlines()
    if lines[0] != MODEL_FORMAT_VERSION or lines[1] != "kind\topinion":
        raise ValueError("unrecognized model format")
    fields = dict(line.split("\t", 1) for line in lines[2:8])
    hyper_parts = dict(part.split("=") for part in fields["hyper"].split("\t"))
    members = {}
    i = 8
    while i < len(lines):
        _, oid, bias = lines[i].split("\t")
        weights = np.array([float(v) for v in lines[i + 1].split(" ")]) \
            if lines[i + 1] else np.array([])
        members[oid] = (weights, float(bias))
        i += 2
    return OpinionClassifier(
        topic_id=fields["topic"],
        members=members,
        vocab_hash=fields["vocab_hash"],
        threshold=float(fields["threshold"]),
        hyperparameters=Hyperparameters(
            l2=float(hyper_parts["l2"]),
            epochs=int(hyper_parts["epochs"]),
            learning_rate=float(hyper_parts["lr"]),
        ),
        skipped=tuple(s for s in fields["skipped"].split(",") if s),
    )


def deserialize_topic_classifier(text: str) -> TopicClassifier:
    lines = text.splitlines()
    if lines[0] != MODEL_FORMAT_VERSION or lines[1] != "kind\ttopic":
        raise ValueError("unrecognized model format")
    fields = dict(line.split("\t", 1) for line in lines[2:8])
    hyper_parts = dict(part.split("=") for part in fields["hyper"].split("\t"))
    n = int(lines[8].split("\t")[1])
    weights = np.array([float(v) for v in lines[9 : 9 + n]])
    return TopicClassifier(
        topic_id=fields["topic"],
        weights=weights,
        bias=float(fields["bias"]),
        vocab_hash=fields["vocab_hash"],
        hyperparameters=Hyperparameters(
            l2=float(hyper_parts["l2"]),
            epochs=int(hyper_parts["epochs"]),
            learning_rate=float(hyper_parts["lr"]),
        ),
        trained_on_iteration=int(fields["iteration"]),
        seed=int(fields["seed"]),
    )
