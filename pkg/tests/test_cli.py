import json
from datetime import date, timedelta

import pytest

from opinionmap.cli import main
from opinionmap.config import ConfigError, load_config
from opinionmap.store import OntologyStore
from opinionmap.synthetic import corpus_to_store, make_planted_corpus

TINY = dict(
    noise_vocab=80, late_noise_vocab=20, n_seed_per_topic=30, n_seed_offtopic=60,
    n_unlabeled=600, n_test_per_topic=15, n_test_offtopic=60,
)


@pytest.fixture(scope="module")
def corpus():
    return make_planted_corpus(seed=5, **TINY)


@pytest.fixture
def store_path(tmp_path, corpus):
    path = tmp_path / "store.jsonl"
    corpus_to_store(corpus, label_opinions=True).save(path)
    return path


@pytest.fixture
def truth_path(tmp_path, corpus):
    path = tmp_path / "truth.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for pid in corpus.all_ids():
            fh.write(json.dumps({
                "posting_id": pid,
                "topics": sorted(corpus.truth_topics[pid]),
            }) + "\n")
    return path


@pytest.fixture
def fast_config(tmp_path):
    path = tmp_path / "config.toml"
    path.write_text(
        'l2 = 0.0001\nepochs = 300\nlearning_rate = 8.0\n'
        'min_df = 2\nngram_max = 1\nrun_cv = false\n'
    )
    return path


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_ingest_report(tmp_path):
    postings = tmp_path / "postings.jsonl"
    rows = [
        {"id": "a", "text": "the climate hoax continues", "platform": "facebook",
         "timestamp_iso8601": "2020-01-01T00:00:00Z"},
        {"id": "b", "text": "nice weather", "platform": "twitter",
         "timestamp_iso8601": "2020-01-02T00:00:00Z"},
        {"id": "a", "text": "dup", "platform": "facebook",
         "timestamp_iso8601": "2020-01-03T00:00:00Z"},
    ]
    postings.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    store = tmp_path / "store.jsonl"
    report = tmp_path / "report.json"
    assert run_cli("ingest", "--postings", postings, "--store", store,
                   "--report", report) == 0
    doc = json.loads(report.read_text())
    assert doc["ingested"] == 2
    assert doc["skipped_duplicates"] == 1
    assert doc["per_topic"]["bushfires-climate-change"] == 1
    assert OntologyStore.load(store).posting("a").text.startswith("the climate")


def test_label_import_and_train_evaluate(tmp_path, fast_config):
    store = tmp_path / "store.jsonl"
    postings = tmp_path / "postings.jsonl"
    rows = []
    for i in range(40):
        topic = "climate-change" if i % 2 else "covid-19"
        token = "hoax" if i % 2 else "virus"
        rows.append({"id": f"p{i}", "text": f"posting {token} number {i}",
                     "platform": "facebook",
                     "timestamp_iso8601": "2020-01-01T00:00:00Z"})
    postings.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    run_cli("ingest", "--postings", postings, "--store", store,
            "--report", tmp_path / "r.json")

    labels = tmp_path / "labels.jsonl"
    with open(labels, "w") as fh:
        for i in range(32):
            fh.write(json.dumps({
                "posting_id": f"p{i}",
                "topics": ["climate-change" if i % 2 else "covid-19"],
            }) + "\n")
    assert run_cli("label-import", "--store", store, "--labels", labels) == 0

    test_labels = tmp_path / "test-labels.jsonl"
    with open(test_labels, "w") as fh:
        for i in range(32, 40):
            fh.write(json.dumps({
                "posting_id": f"p{i}",
                "topics": ["climate-change" if i % 2 else "covid-19"],
            }) + "\n")
    assert run_cli("label-import", "--store", store, "--labels", test_labels,
                   "--test-reserved") == 0

    model_dir = tmp_path / "models"
    assert run_cli("--config", fast_config, "train", "--store", store,
                   "--model-dir", model_dir) == 0
    assert (model_dir / "vocab.txt").exists()
    assert (model_dir / "topic-climate-change.model").exists()

    report = tmp_path / "eval.json"
    assert run_cli("--config", fast_config, "evaluate", "--store", store,
                   "--model-dir", model_dir, "--output", report) == 0
    doc = json.loads(report.read_text())
    assert doc["source"] == "test-set"
    assert doc["macro_f1"] == 1.0  # separable two-token corpus


def test_iterate_deterministic_ledgers(tmp_path, store_path, truth_path, fast_config):
    ledgers = []
    for run in ("a", "b"):
        ledger = tmp_path / f"ledger-{run}.jsonl"
        code = run_cli("--config", fast_config, "--seed", 7, "iterate",
                       "--store", store_path, "--truth", truth_path,
                       "--oracle", "scripted", "--iterations", 2,
                       "--ledger", ledger, "--metrics", tmp_path / f"m-{run}.csv",
                       "--model-dir", tmp_path / f"models-{run}")
        assert code == 0
        ledgers.append(ledger.read_bytes())
    assert ledgers[0] == ledgers[1]
    models_a = sorted((tmp_path / "models-a").glob("*.model"))
    models_b = sorted((tmp_path / "models-b").glob("*.model"))
    assert [p.read_bytes() for p in models_a] == [p.read_bytes() for p in models_b]


def test_baseline_cli(tmp_path, store_path, truth_path, fast_config):
    ledger = tmp_path / "baseline.jsonl"
    assert run_cli("--config", fast_config, "baseline", "--store", store_path,
                   "--truth", truth_path, "--iterations", 1,
                   "--ledger", ledger) == 0
    records = [json.loads(line) for line in ledger.read_text().splitlines()]
    strategies = {row[2] for row in records[1]["manifest"]}
    assert strategies == {"random"}


def test_sample_manifest(tmp_path, store_path, fast_config):
    out = tmp_path / "manifest.tsv"
    assert run_cli("--config", fast_config, "sample", "--store", store_path,
                   "--output", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "iteration\ttopic\tstrategy\tposting_id\tscore"
    assert len(lines) == 1 + 100


def test_classify_row_count(tmp_path, store_path, truth_path, fast_config):
    model_dir = tmp_path / "models"
    run_cli("--config", fast_config, "train", "--store", store_path,
            "--model-dir", model_dir)
    inputs = tmp_path / "inputs.jsonl"
    rows = [{"id": f"x{i}", "text": f"sig0w{i % 3} n00{i} text", "platform": "twitter",
             "timestamp_iso8601": "2020-06-01T00:00:00Z"} for i in range(17)]
    inputs.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    out = tmp_path / "labels.tsv"
    assert run_cli("classify", "--model-dir", model_dir, "--input", inputs,
                   "--output", out) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 17


def relations_fixture(tmp_path, n_opinions=27, days=20):
    import numpy as np

    rng = np.random.default_rng(1)
    opinions = [f"o{i:02d}" for i in range(n_opinions)]
    lines = []
    day0 = date(2020, 9, 1)
    pid = 0
    for d in range(days):
        day = day0 + timedelta(days=d)
        for _ in range(40):
            pair = rng.choice(n_opinions, size=2, replace=False)
            for k in pair:
                lines.append(f"p{pid:05d}\t{opinions[k]}\t{day.isoformat()}")
            pid += 1
        # make sure every opinion shows up on every day
        for i in range(n_opinions):
            lines.append(f"p{pid:05d}\t{opinions[i]}\t{day.isoformat()}")
            lines.append(f"p{pid:05d}\t{opinions[(i + 1) % n_opinions]}\t{day.isoformat()}")
            pid += 1
    path = tmp_path / "relations.tsv"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_network_centrality_window(tmp_path):
    relations = relations_fixture(tmp_path)
    out = tmp_path / "centrality.csv"
    assert run_cli("network", "centrality", "--relations", relations,
                   "--window", "14d", "--output", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "date,opinion,measure,value"
    # 14 days x 27 opinions x 3 measures
    assert len(lines) == 1 + 14 * 27 * 3


def test_network_proportions_and_export(tmp_path):
    relations = relations_fixture(tmp_path, n_opinions=6, days=3)
    props = tmp_path / "props.csv"
    assert run_cli("network", "proportions", "--relations", relations,
                   "--output", props) == 0
    assert props.read_text().splitlines()[0] == "date,key,proportion"

    flags = tmp_path / "flags.json"
    flags.write_text(json.dumps({"o00": True, "o01": False}))
    export = tmp_path / "graph.json"
    assert run_cli("network", "export", "--relations", relations,
                   "--flags", flags, "--output", export) == 0
    doc = json.loads(export.read_text())
    assert len(doc["nodes"]) == 6
    assert doc["nodes"][0]["conspiracy"] is True

    groups = tmp_path / "groups.csv"
    assert run_cli("network", "centrality", "--relations", relations,
                   "--flags", flags, "--groups", "--output", groups) == 0
    assert groups.read_text().startswith("day,group,n,degree,closeness,betweenness")


def test_agreement_cli(tmp_path):
    submissions = tmp_path / "submissions.jsonl"
    with open(submissions, "w") as fh:
        for i in range(100):
            for coder in ("a", "b"):
                topics = ["t1"] if (coder == "a" or i < 81) else ["t2"]
                fh.write(json.dumps({
                    "posting_id": f"p{i}", "annotator_id": coder,
                    "topics": topics, "opinions": []}) + "\n")
    out = tmp_path / "agreement.json"
    assert run_cli("agreement", "--submissions", submissions,
                   "--annotator-a", "a", "--annotator-b", "b",
                   "--output", out) == 0
    assert json.loads(out.read_text())["agreement"] == 0.81


def test_missing_store_fails_cleanly(tmp_path):
    assert run_cli("evaluate", "--store", tmp_path / "nope.jsonl",
                   "--model-dir", tmp_path, "--output", tmp_path / "o.json") == 1


def test_config_layering(tmp_path, monkeypatch):
    path = tmp_path / "c.toml"
    path.write_text("seed = 3\nepochs = 50\n")
    cfg = load_config(path)
    assert cfg.seed == 3 and cfg.epochs == 50
    monkeypatch.setenv("OPINIONMAP_EPOCHS", "75")
    cfg = load_config(path)
    assert cfg.epochs == 75
    cfg = load_config(path, overrides={"epochs": 99})
    assert cfg.epochs == 99


def test_config_bad_field_named(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("nonsense = 1\n")
    with pytest.raises(ConfigError, match="nonsense"):
        load_config(path)
    path.write_text("epochs = \"many\"\n")
    with pytest.raises(ConfigError, match="epochs"):
        load_config(path)


def test_config_defaults_pin_documented_constants():
    from opinionmap.config import RunConfig

    cfg = RunConfig()
    assert (cfg.k_active, cfg.k_top_confidence, cfg.k_random) == (10, 10, 5)
    assert cfg.cv_folds == 5
    assert cfg.test_size == 114
    assert cfg.epsilon_gain == 0.005
    assert cfg.ngram_range() == (1, 2)
    assert cfg.min_df == 2
