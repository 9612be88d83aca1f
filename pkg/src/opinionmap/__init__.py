"""opinionmap: human-in-the-loop dataset augmentation and opinion
co-occurrence analytics for studying problematic online speech.

The pipeline: an ontology store links postings, topics, opinions and
places through triples; TF-IDF text features feed per-topic classifiers
that gate per-topic opinion classifiers; a three-strategy sampler and an
iteration loop grow the labeled set until test performance converges; and
co-occurrence networks over machine-labeled relations expose the temporal
dynamics of opinions.
"""

from .classifiers import (
    EvalReport,
    Hyperparameters,
    OpinionClassifier,
    Prediction,
    TopicClassifier,
    cross_validate,
    evaluate,
    predict_opinions,
    predict_topics,
    train_opinion_classifier,
    train_topic_classifier,
)
from .config import RunConfig, load_config
from .features import Vocabulary, fit_vocabulary, to_matrix, tokenize, vectorize
from .loop import (
    AnnotationRequest,
    AugmentationLoop,
    BatchLabel,
    IterationRecord,
    LoopConfig,
    check_convergence,
    run_baseline,
)
from .network import (
    NetworkSnapshot,
    OpinionRelation,
    build_snapshot,
    centrality,
    daily_snapshots,
    edge_weight_proportions,
    export_snapshot_map,
    frequency_distribution,
    group_centrality_series,
    overlay_series,
)
from .sampling import (
    SampleBatch,
    compose_batch,
    sample_active,
    sample_random,
    sample_top_confidence,
    uncertainty,
)
from .service import AnnotationService, ServiceError
from .store import OntologyStore, Opinion, Posting, Topic
from .synthetic import ScriptedOracle, corpus_to_store, make_planted_corpus

__version__ = "0.1.0"

__all__ = [
    "AnnotationRequest", "AnnotationService", "AugmentationLoop", "BatchLabel",
    "EvalReport", "Hyperparameters", "IterationRecord", "LoopConfig",
    "NetworkSnapshot", "OntologyStore", "Opinion", "OpinionClassifier",
    "OpinionRelation", "Posting", "Prediction", "RunConfig", "SampleBatch",
    "ScriptedOracle", "ServiceError", "Topic", "TopicClassifier", "Vocabulary",
    "build_snapshot", "centrality", "check_convergence", "compose_batch",
    "corpus_to_store", "cross_validate", "daily_snapshots",
    "edge_weight_proportions", "evaluate", "export_snapshot_map",
    "fit_vocabulary", "frequency_distribution", "group_centrality_series",
    "load_config", "make_planted_corpus", "overlay_series", "predict_opinions",
    "predict_topics", "run_baseline", "sample_active", "sample_random",
    "sample_top_confidence", "to_matrix", "tokenize", "train_opinion_classifier",
    "train_topic_classifier", "uncertainty", "vectorize",
]
