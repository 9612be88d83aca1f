"""The two-level classification scheme
=====================================

Level one: an independent binary classifier per topic (a posting can be
about several topics, or none, which makes it off-topic). Level two: a
one-vs-rest opinion classifier per topic, consulted only for predicted
topics. Off-topic postings never reach the opinion level.
"""

import numpy as np

from opinionmap import (
    Hyperparameters,
    cross_validate,
    fit_vocabulary,
    predict_opinions,
    predict_topics,
    to_matrix,
    train_opinion_classifier,
    train_topic_classifier,
)

rng = np.random.default_rng(0)

TOPIC_TOKENS = {
    "climate-change": ["climate", "hoax", "warming", "carbon"],
    "covid-19": ["covid", "virus", "lockdown", "vaccine"],
}
OPINION_TOKENS = {
    "o-hoax": (["hoax", "scam"], "climate-change"),
    "o-warming": (["warming", "heat"], "climate-change"),
    "o-lab": (["lab", "wuhan"], "covid-19"),
}

texts, topic_truth, opinion_truth = [], [], []
for i in range(600):
    roll = i % 3
    if roll == 2:
        texts.append(" ".join(rng.choice(["weather", "lunch", "footy", "news"], 5)))
        topic_truth.append(None)
        opinion_truth.append(set())
        continue
    topic = "climate-change" if roll == 0 else "covid-19"
    ops = {o for o, (_, t) in OPINION_TOKENS.items()
           if t == topic and rng.random() < 0.5}
    tokens = list(rng.choice(TOPIC_TOKENS[topic], 3))
    for o in ops:
        tokens += OPINION_TOKENS[o][0]
    texts.append(" ".join(tokens))
    topic_truth.append(topic)
    opinion_truth.append(ops)

vocab = fit_vocabulary(texts, min_df=2)
X = to_matrix(texts, vocab)
hyper = Hyperparameters(l2=0.001, epochs=300, learning_rate=5.0)

topic_clfs = {}
y_per_topic = {}
for topic in TOPIC_TOKENS:
    y = np.array([1 if t == topic else 0 for t in topic_truth])
    y_per_topic[topic] = y
    topic_clfs[topic] = train_topic_classifier(topic, X, y, vocab, hyper)

report, chosen = cross_validate(X, y_per_topic, vocab, k=5, seed=1,
                                hyper=hyper, search_budget=2)
print("5-fold cross-validation (nested random search over the L2 grid):")
for topic, metrics in report.per_topic.items():
    print(f"  {topic}: accuracy={metrics['accuracy']:.3f} f1={metrics['f1']:.3f} "
          f"(picked l2={chosen[topic].l2})")
print(f"  macro: accuracy={report.macro_accuracy:.3f} f1={report.macro_f1:.3f}")

opinion_clfs = {}
for topic in TOPIC_TOKENS:
    rows = [i for i, t in enumerate(topic_truth) if t == topic]
    labels = {o: np.array([1 if o in opinion_truth[i] else 0 for i in rows])
              for o, (_, t) in OPINION_TOKENS.items() if t == topic}
    opinion_clfs[topic] = train_opinion_classifier(
        topic, X[rows], labels, vocab, hyper)

print("\nclassifying three fresh postings:")
for text in [
    "climate hoax scam everywhere",     # topic + hoax opinion
    "virus lockdown lab wuhan report",  # topic + lab opinion
    "lunch footy weather",              # off-topic: no opinions consulted
]:
    labels, probs = predict_topics(text, topic_clfs, vocab)
    opinions = predict_opinions(text, labels, opinion_clfs, vocab)
    shown = {t: round(p, 3) for t, p in probs.items()}
    print(f"  {text!r}\n    topics={sorted(labels) or 'off-topic'} probs={shown} "
          f"opinions={sorted(opinions) or '-'}")
