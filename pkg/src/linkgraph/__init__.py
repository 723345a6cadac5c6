"""Issue-link graph analysis toolkit.

Ingests issue-tracker exports, normalizes link types into five categories,
computes structural graph metrics, and builds balanced, leakage-controlled
train/test datasets with a TF-IDF similarity baseline and full evaluation.
"""

from .dataset import (
    DatasetBundle,
    LabeledPair,
    PairClass,
    SplitConfig,
    TrainingConfig,
    build_dataset,
    make_test_sets,
    make_training_set,
    split_cluster,
    split_random,
    synthesize_nonlinks,
)
from .evaluation import (
    ConfusionMatrix,
    EvalReport,
    evaluate,
    ol_confusion_rate,
    robustness_delta,
    sweep,
)
from .graph import (
    Component,
    GraphMetricsReport,
    IssueGraph,
    build_graph,
    connected_components,
    complexity_metrics,
    degree_assortativity,
    is_star,
    is_tree,
    make_graph,
    metrics_report,
    shape_metrics,
    transitivity,
)
from .ingest import (
    CleaningReport,
    IssueRecord,
    RawLink,
    Repository,
    clean,
    coverage,
    load_repository,
    summarize,
)
from .model import (
    TfIdfIndex,
    ThresholdClassifier,
    TokenizerConfig,
    fit_tfidf,
    ktop_retrieve,
    pair_similarity,
    preprocess,
    train_threshold,
)
from .taxonomy import (
    LinkCategory,
    LinkTaxonomy,
    categorize,
    category_prevalence,
    load_taxonomy,
    normalize_type,
    type_prevalence,
)

__version__ = "0.1.0"
