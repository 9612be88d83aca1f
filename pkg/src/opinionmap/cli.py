"""Command-line entry point driving every pipeline stage headlessly.

Logs go to stderr, data goes to the declared output paths only; given the
same config and seeds, outputs are byte-identical across runs.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import date, timedelta
from pathlib import Path

from . import keywords as default_keywords
from .classifiers import (
    deserialize_opinion_classifier,
    deserialize_topic_classifier,
    evaluate,
    predict_opinions,
    predict_topics,
    serialize_opinion_classifier,
    serialize_topic_classifier,
    train_opinion_classifier,
    train_topic_classifier,
)
from .config import ConfigError, RunConfig, load_config
from .features import Vocabulary, fit_vocabulary, to_matrix
from .loop import AugmentationLoop, BatchLabel, metrics_csv, run_baseline
from .network import (
    build_snapshot,
    centrality_csv,
    daily_snapshots,
    edge_weight_proportions,
    export_snapshot_map,
    group_centrality_series,
    overlay_series,
    parse_relations,
    read_daily_ratios,
    series_csv,
)
from .service import AnnotationService, exact_match_agreement
from .store import OntologyStore, StoreError, read_posting_records

log = logging.getLogger("opinionmap")


class CliError(Exception):
    pass


# ---------------------------------------------------------------------------
# shared helpers


def _load_store(path) -> OntologyStore:
    if not Path(path).exists():
        raise CliError(f"store file not found: {path}")
    return OntologyStore.load(path)


def _write(path, text: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8")
    log.info("wrote %s", path)


def _model_paths(model_dir):
    return Path(model_dir)


def _save_models(model_dir, vocab, topic_classifiers, opinion_classifiers=None):
    root = _model_paths(model_dir)
    root.mkdir(parents=True, exist_ok=True)
    (root / "vocab.txt").write_text(vocab.serialize(), encoding="utf-8")
    for tid, clf in sorted(topic_classifiers.items()):
        (root / f"topic-{tid}.model").write_text(
            serialize_topic_classifier(clf), encoding="utf-8")
    for tid, clf in sorted((opinion_classifiers or {}).items()):
        (root / f"opinions-{tid}.model").write_text(
            serialize_opinion_classifier(clf), encoding="utf-8")


def _load_models(model_dir):
    root = _model_paths(model_dir)
    vocab_path = root / "vocab.txt"
    if not vocab_path.exists():
        raise CliError(f"no vocabulary at {vocab_path}")
    vocab = Vocabulary.deserialize(vocab_path.read_text(encoding="utf-8"))
    topic_clfs = {}
    opinion_clfs = {}
    for path in sorted(root.glob("topic-*.model")):
        clf = deserialize_topic_classifier(path.read_text(encoding="utf-8"))
        topic_clfs[clf.topic_id] = clf
    for path in sorted(root.glob("opinions-*.model")):
        clf = deserialize_opinion_classifier(path.read_text(encoding="utf-8"))
        opinion_clfs[clf.topic_id] = clf
    if not topic_clfs:
        raise CliError(f"no topic models under {root}")
    return vocab, topic_clfs, opinion_clfs


def _store_vocab(store, cfg: RunConfig) -> Vocabulary:
    texts = [store.posting(pid).text for pid in store.posting_ids()]
    return fit_vocabulary(texts, min_df=cfg.min_df, ngram_range=cfg.ngram_range())


class FileOracle:
    """Scripted annotation source answering from a truth-label file."""

    def __init__(self, path):
        self.labels = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                self.labels[row["posting_id"]] = row

    def label_batch(self, requests):
        out = []
        for req in requests:
            row = self.labels.get(req.posting_id)
            if row is None:
                continue
            out.append(BatchLabel(
                posting_id=req.posting_id,
                topics=tuple(row.get("topics", ())),
                opinion_ids=tuple(row.get("opinions", ())),
                new_opinions=tuple(
                    (n["statement"], tuple(n["topic_ids"]), bool(n.get("conspiracy")))
                    for n in row.get("new_opinions", ())
                ),
            ))
        return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(args, cfg):
    store = OntologyStore.load(args.store) if Path(args.store).exists() else OntologyStore()
    if args.keywords:
        with open(args.keywords, encoding="utf-8") as fh:
            keyword_map = json.load(fh)
    else:
        keyword_map = default_keywords.group_keyword_map()
    with open(args.postings, encoding="utf-8") as fh:
        report = store.ingest_postings(read_posting_records(fh), keyword_map)
    store.save(args.store)
    doc = {
        "ingested": report.ingested,
        "skipped_duplicates": report.skipped_duplicates,
        "per_topic": report.per_topic,
        "off_keyword": report.off_keyword,
        "errors": report.errors,
    }
    _write(args.report, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    log.info("ingested %d postings (%d duplicates skipped, %d errors)",
             report.ingested, report.skipped_duplicates, len(report.errors))
    return 0


def cmd_label_import(args, cfg):
    store = _load_store(args.store)
    n = 0
    with open(args.labels, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            for tid in row.get("topics", ()):
                if tid not in {t.id for t in store.topics()}:
                    store.add_topic(tid, tid)
            if args.test_reserved:
                store.mark_test_reserved([row["posting_id"]])
            store.label_posting(
                row["posting_id"], row.get("topics", ()), row.get("opinions", ()),
                [(d["statement"], d["topic_ids"], bool(d.get("conspiracy")))
                 for d in row.get("new_opinions", ())],
            )
            n += 1
    store.save(args.store)
    log.info("imported %d label rows", n)
    return 0


def cmd_train(args, cfg):
    store = _load_store(args.store)
    vocab = _store_vocab(store, cfg)
    ids = store.posting_ids("labeled")
    if not ids:
        raise CliError("store has no labeled postings to train on")
    texts = [store.posting(pid).text for pid in ids]
    X = to_matrix(texts, vocab)
    by_topic = store.topic_label_sets()
    topic_clfs = {}
    for topic in store.topics():
        y = [1 if pid in by_topic[topic.id] else 0 for pid in ids]
        topic_clfs[topic.id] = train_topic_classifier(
            topic.id, X, y, vocab, cfg.hyperparameters(), seed=cfg.seed)
    opinion_clfs = {}
    if args.level in ("opinion", "both"):
        expressed = store.opinion_label_sets()
        for topic in store.topics():
            topic_ids = sorted(by_topic[topic.id] & set(ids))
            if not topic_ids:
                continue
            X_topic = to_matrix([store.posting(p).text for p in topic_ids], vocab)
            labels = {
                op.id: [1 if pid in expressed.get(op.id, ()) else 0 for pid in topic_ids]
                for op in store.active_opinions_of_topic(topic.id)
            }
            if not labels:
                continue
            opinion_clfs[topic.id] = train_opinion_classifier(
                topic.id, X_topic, labels, vocab, cfg.hyperparameters(),
                threshold=cfg.opinion_threshold, seed=cfg.seed)
    _save_models(args.model_dir, vocab,
                 topic_clfs if args.level in ("topic", "both") else {},
                 opinion_clfs)
    log.info("trained %d topic and %d opinion classifiers",
             len(topic_clfs), len(opinion_clfs))
    return 0


def cmd_evaluate(args, cfg):
    store = _load_store(args.store)
    vocab, topic_clfs, _ = _load_models(args.model_dir)
    test_ids = store.posting_ids("test-reserved")
    if not test_ids:
        raise CliError("store has no test-reserved postings")
    X = to_matrix([store.posting(pid).text for pid in test_ids], vocab)
    by_topic = store.topic_label_sets()
    y = {tid: [1 if pid in by_topic[tid] else 0 for pid in test_ids]
         for tid in topic_clfs}
    report = evaluate(topic_clfs, X, y)
    _write(args.output, json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
    log.info("test macro accuracy %.4f, macro F1 %.4f",
             report.macro_accuracy, report.macro_f1)
    return 0


def _make_loop(store, cfg, ledger_path=None) -> AugmentationLoop:
    topics = [t.id for t in store.topics()]
    if not topics:
        raise CliError("store has no topics")
    return AugmentationLoop(store, topics, cfg.loop_config(),
                            ledger_path=ledger_path, min_df=cfg.min_df,
                            ngram_range=cfg.ngram_range())


def cmd_sample(args, cfg):
    store = _load_store(args.store)
    loop = _make_loop(store, cfg)
    loop.initialize()
    batch = loop.compose()
    _write(args.output, batch.manifest_tsv())
    return 0


def _run_loop(args, cfg, baseline: bool) -> int:
    store = _load_store(args.store)
    oracle = FileOracle(args.truth)
    ledger = args.ledger
    if ledger and Path(ledger).exists():
        Path(ledger).unlink()
    if baseline:
        records = run_baseline(store, [t.id for t in store.topics()],
                               cfg.loop_config(), oracle, args.iterations,
                               ledger_path=ledger, min_df=cfg.min_df,
                               ngram_range=cfg.ngram_range())
        loop = None
    else:
        loop = _make_loop(store, cfg, ledger_path=ledger)
        records = loop.run(oracle, n_iterations=args.iterations)
    if args.metrics:
        _write(args.metrics, metrics_csv(records))
    if args.model_dir and loop is not None:
        _save_models(args.model_dir, loop.vocab, loop.classifiers)
    if args.save_store:
        store.save(args.save_store)
    final = records[-1]
    log.info("finished at iteration %d: macro F1 %.4f (converged=%s)",
             final.iteration, final.test_report.macro_f1, final.converged)
    return 0


def cmd_iterate(args, cfg):
    if args.oracle != "scripted":
        raise CliError("only the scripted oracle is available headlessly; "
                       "run `serve` for human annotation")
    return _run_loop(args, cfg, baseline=False)


def cmd_baseline(args, cfg):
    return _run_loop(args, cfg, baseline=True)


def cmd_classify(args, cfg):
    vocab, topic_clfs, opinion_clfs = _load_models(args.model_dir)
    rows = []
    with open(args.input, encoding="utf-8") as fh:
        for record, error in read_posting_records(fh):
            if error is not None:
                raise CliError(error)
            labels, probs = predict_topics(record["text"], topic_clfs, vocab)
            opinions = predict_opinions(record["text"], labels, opinion_clfs, vocab)
            rows.append((record["id"],
                         ",".join(sorted(labels)) if labels else "off-topic",
                         ",".join(sorted(opinions))))
    lines = ["posting_id\ttopics\topinions"]
    lines += ["\t".join(row) for row in rows]
    _write(args.output, "\n".join(lines) + "\n")
    log.info("classified %d postings", len(rows))
    return 0


def _parse_window(args, relations):
    if args.window:
        if not args.window.endswith("d"):
            raise CliError("--window must look like 14d")
        days = int(args.window[:-1])
        last = max(r.day for r in relations)
        return (last - timedelta(days=days - 1), last)
    start = date.fromisoformat(args.start) if args.start else None
    end = date.fromisoformat(args.end) if args.end else None
    if start or end:
        return (start, end)
    return None


def _window_filter(relations, window):
    if window is None:
        return relations
    return [r for r in relations
            if (window[0] is None or r.day >= window[0])
            and (window[1] is None or r.day <= window[1])]


def cmd_network(args, cfg):
    with open(args.relations, encoding="utf-8") as fh:
        relations = parse_relations(fh)
    if not relations:
        raise CliError(f"no relations in {args.relations}")
    window = _parse_window(args, relations)
    relations = _window_filter(relations, window)
    flags = {}
    if args.flags:
        with open(args.flags, encoding="utf-8") as fh:
            flags = {k: bool(v) for k, v in json.load(fh).items()}

    if args.network_command == "build":
        snap = build_snapshot(relations)
        lines = ["opinion_a\topinion_b\tweight"]
        lines += [f"{a}\t{b}\t{w}" for (a, b), w in sorted(snap.edges.items())]
        _write(args.output, "\n".join(lines) + "\n")
    elif args.network_command == "proportions":
        props = edge_weight_proportions(daily_snapshots(relations))
        _write(args.output, series_csv(props, value_name="proportion"))
    elif args.network_command == "centrality":
        dailies = daily_snapshots(relations)
        if args.groups:
            rows = group_centrality_series(dailies, flags)
            if args.ratios:
                with open(args.ratios, encoding="utf-8") as fh:
                    rows = overlay_series(rows, read_daily_ratios(fh))
            lines = [",".join(rows[0].keys())] if rows else []
            lines += [",".join("" if v is None else str(v) for v in r.values())
                      for r in rows]
            _write(args.output, "\n".join(lines) + "\n")
        else:
            _write(args.output, centrality_csv(dailies))
    elif args.network_command == "export":
        snap = build_snapshot(relations)
        _write(args.output, export_snapshot_map(snap, flags))
    else:
        raise CliError(f"unknown network command {args.network_command!r}")
    return 0


def cmd_agreement(args, cfg):
    per_posting: dict[str, dict[str, tuple]] = {}
    with open(args.submissions, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            per_posting.setdefault(row["posting_id"], {})[row["annotator_id"]] = (
                tuple(sorted(row.get("topics", ()))),
                tuple(sorted(row.get("opinions", ()))),
            )
    value = exact_match_agreement(per_posting, args.annotator_a, args.annotator_b)
    _write(args.output, json.dumps({
        "annotator_a": args.annotator_a, "annotator_b": args.annotator_b,
        "agreement": value}, sort_keys=True) + "\n")
    log.info("agreement(%s, %s) = %.4f", args.annotator_a, args.annotator_b, value)
    return 0


def cmd_serve(args, cfg):
    import uvicorn

    from .webapi import create_app

    store = _load_store(args.store)
    service = AnnotationService(store, lease_seconds=cfg.lease_seconds,
                                double_coding=args.double_coding)
    app = create_app(service)
    log.info("serving on %s:%d", cfg.host, cfg.port)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opinionmap",
        description="ontology-backed labeling, HITL dataset augmentation and "
                    "opinion co-occurrence analytics",
    )
    parser.add_argument("--config", help="TOML configuration file")
    parser.add_argument("--seed", type=int, help="override the run seed")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="ingest posting records with keyword tagging")
    p.add_argument("--postings", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--keywords", help="JSON map of topic group to keyword list")
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("label-import", help="import labels as triples")
    p.add_argument("--store", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--test-reserved", action="store_true",
                   help="mark these postings as the held-out test set")
    p.set_defaults(func=cmd_label_import)

    p = sub.add_parser("train", help="train classifiers from store labels")
    p.add_argument("--store", required=True)
    p.add_argument("--model-dir", required=True)
    p.add_argument("--level", choices=("topic", "opinion", "both"), default="both")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate models on the test-reserved set")
    p.add_argument("--store", required=True)
    p.add_argument("--model-dir", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sample", help="compose one batch and export its manifest")
    p.add_argument("--store", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_sample)

    for name, fn in (("iterate", cmd_iterate), ("baseline", cmd_baseline)):
        p = sub.add_parser(name, help=f"run the {name} augmentation loop")
        p.add_argument("--store", required=True)
        p.add_argument("--truth", required=True,
                       help="JSONL truth labels for the scripted oracle")
        p.add_argument("--oracle", default="scripted", choices=("scripted",))
        p.add_argument("--iterations", type=int, default=None)
        p.add_argument("--ledger", required=True)
        p.add_argument("--metrics")
        p.add_argument("--model-dir")
        p.add_argument("--save-store")
        p.set_defaults(func=fn)

    p = sub.add_parser("classify", help="label postings with trained models")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("network", help="opinion co-occurrence analytics")
    p.add_argument("network_command",
                   choices=("build", "proportions", "centrality", "export"))
    p.add_argument("--relations", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--window", help="trailing window like 14d")
    p.add_argument("--start")
    p.add_argument("--end")
    p.add_argument("--flags", help="JSON map opinion id -> conspiracy flag")
    p.add_argument("--groups", action="store_true",
                   help="emit per-group mean centrality series")
    p.add_argument("--ratios", help="daily news-ratio CSV to overlay")
    p.set_defaults(func=cmd_network)

    p = sub.add_parser("agreement", help="double-coding agreement from submissions")
    p.add_argument("--submissions", required=True)
    p.add_argument("--annotator-a", required=True)
    p.add_argument("--annotator-b", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--store", required=True)
    p.add_argument("--double-coding", action="store_true")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config, overrides={"seed": args.seed})
        return args.func(args, cfg)
    except (CliError, ConfigError, StoreError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
