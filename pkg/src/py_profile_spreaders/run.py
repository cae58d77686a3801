"""
This module contains the orchestration logic of the profiling pipeline.

Each stage reads its inputs from the configured paths, runs the corresponding
library operation and writes a CSV handoff into ``output_dir``. Stages are
independent so any of them can be rerun on its own; with unchanged inputs and
seed their outputs are byte-identical.
"""

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import fsspec
from fsspec.core import url_to_fs

from . import classifier, corpus, demo, features, stats
from .config import PipelineConfig, apply_overrides, load_config
from .embeddings import EmbeddingLoadError, EmbeddingTable, get_embedding_source
from .lexicon import CategoryLexicon, load_lexicon, starter_lexicon

# Configure logging
logging.basicConfig(
    level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)

SPREADER_LABELS_FILE = "spreader_labels.csv"
FEATURES_FILE = "features.csv"
SIGNIFICANCE_CSV_FILE = "significance.csv"
SIGNIFICANCE_TEXT_FILE = "significance.txt"
SUMMARY_FILE = "corpus_summary.csv"
FUSION_MODEL_FILE = "fusion_model.json"
BASELINE_MODEL_FILE = "baseline_model.json"
EVALUATION_FILE = "evaluation.csv"
PROJECTION_FILE = "projection.csv"


class StageConfigurationError(ValueError):
    """Raised when the configuration lacks a setting a stage needs."""


@dataclass
class Corpus:
    tweets: List[corpus.TweetRecord]
    users: List[corpus.UserRecord]
    news_labels: List[corpus.NewsLabel]
    warnings: List[corpus.InvalidRecordError] = field(default_factory=list)


def _require(config: PipelineConfig, name: str) -> str:
    value = getattr(config, name)
    if not value:
        raise StageConfigurationError(f"'{name}' must be set in the configuration")
    return value


def require_seed(config: PipelineConfig) -> int:
    if config.seed is None:
        raise StageConfigurationError(
            "A seed is required for training; set 'seed' in the config or pass --seed"
        )
    return config.seed


def output_path(config: PipelineConfig, file_name: str) -> str:
    """Joins ``file_name`` onto the output directory, creating the directory."""
    fs, root = url_to_fs(config.output_dir)
    fs.makedirs(root, exist_ok=True)
    return f"{config.output_dir.rstrip('/')}/{file_name}"


def _write_text(uri: str, text: str) -> None:
    with fsspec.open(uri, "w", encoding="utf-8", newline="") as f:
        f.write(text)


def load_corpus(config: PipelineConfig, with_users: bool = True) -> Corpus:
    """Loads tweets, news labels and (optionally) account records."""
    tweets, tweet_warnings = corpus.load_tweets(_require(config, "tweets_path"))
    news_labels, label_warnings = corpus.load_news_labels(
        _require(config, "labels_path")
    )
    users: List[corpus.UserRecord] = []
    user_warnings: List[corpus.InvalidRecordError] = []
    if with_users:
        users, user_warnings = corpus.load_users(_require(config, "users_path"))
    return Corpus(
        tweets=tweets,
        users=users,
        news_labels=news_labels,
        warnings=[*tweet_warnings, *label_warnings, *user_warnings],
    )


def load_configured_lexicon(config: PipelineConfig) -> CategoryLexicon:
    if config.lexicon_path:
        return load_lexicon(config.lexicon_path)
    logger.info("No lexicon_path configured; using the starter lexicon.")
    return starter_lexicon()


def _spreader_labels(
    config: PipelineConfig, data: Corpus
) -> List[corpus.SpreaderLabel]:
    labels, _ = corpus.label_spreaders(
        data.tweets, data.news_labels, threshold=config.spreader_threshold
    )
    return labels


def run_label(config: PipelineConfig) -> Tuple[str, List[corpus.SpreaderLabel]]:
    """Tags every posting user and writes ``spreader_labels.csv``."""
    data = load_corpus(config, with_users=False)
    labels = _spreader_labels(config, data)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["user_id", "label", "fake_share_count"])
    for label in labels:
        writer.writerow([label.user_id, label.label.value, label.fake_share_count])
    uri = output_path(config, SPREADER_LABELS_FILE)
    _write_text(uri, buffer.getvalue())

    n_fake = sum(1 for label in labels if label.label is corpus.SpreaderClass.FAKE)
    logger.info(
        f"Labeled {len(labels)} users ({n_fake} fake-news spreaders, threshold "
        f"{config.spreader_threshold}) -> {uri}"
    )
    return uri, labels


def compute_feature_rows(
    config: PipelineConfig, data: Optional[Corpus] = None
) -> List[features.LabeledFeatureRow]:
    """Assembles the feature matrix from the corpus files."""
    lexicon = load_configured_lexicon(config)
    data = data or load_corpus(config)
    labels = _spreader_labels(config, data)
    documents = corpus.build_documents(data.tweets, target_words=config.target_words)
    return features.build_feature_rows(
        labels,
        documents,
        data.users,
        data.tweets,
        data.news_labels,
        lexicon,
        now=config.reference_now,
        max_workers=config.workers,
    )


def feature_rows(config: PipelineConfig) -> List[features.LabeledFeatureRow]:
    """The configured feature matrix handoff, or a fresh one from the corpus."""
    if config.features_path:
        logger.info(f"Reading feature matrix from {config.features_path}.")
        return features.read_feature_matrix(config.features_path)
    return compute_feature_rows(config)


def run_features(config: PipelineConfig) -> Tuple[str, int]:
    rows = compute_feature_rows(config)
    uri = output_path(config, FEATURES_FILE)
    count = features.write_feature_matrix(rows, uri)
    logger.info(f"Wrote {count} feature rows -> {uri}")
    return uri, count


def run_stats(config: PipelineConfig) -> List[stats.TTestResult]:
    """Writes the significance table as CSV and as an aligned text report."""
    results = stats.significance_table(feature_rows(config))
    stats.write_report_csv(results, output_path(config, SIGNIFICANCE_CSV_FILE))
    _write_text(
        output_path(config, SIGNIFICANCE_TEXT_FILE), stats.format_report(results)
    )
    flagged = [r.feature_name for r in results if not r.testable]
    if flagged:
        logger.warning(f"Untestable feature(s): {', '.join(flagged)}")
    return results


def run_summary(config: PipelineConfig) -> List[corpus.CorpusSummaryRow]:
    data = load_corpus(config, with_users=False)
    rows = corpus.summarize_corpus(_spreader_labels(config, data), data.tweets)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["label", "users", "tweets"])
    for row in rows:
        writer.writerow([row.label.value, row.users, row.tweets])
    _write_text(output_path(config, SUMMARY_FILE), buffer.getvalue())
    return rows


def resolve_embeddings(config: PipelineConfig) -> EmbeddingTable:
    """
    Builds the embedding table from the configured source.

    ``baseline_embed`` selects the hashed source over the tweets; otherwise an
    ``embeddings_path`` file is required.
    """
    if config.baseline_embed:
        tweets, _ = corpus.load_tweets(_require(config, "tweets_path"))
        documents = corpus.build_documents(tweets, target_words=config.target_words)
        source = get_embedding_source("hashed", dim=config.embedding_dim)
    elif config.embeddings_path:
        documents = []
        source = get_embedding_source("file", path=config.embeddings_path)
    else:
        raise EmbeddingLoadError(
            "No embeddings file configured; "
            "set 'embeddings_path' or pass --baseline-embed"
        )
    logger.info(f"Using embedding source '{source.name}'.")
    return source.embed(documents)


def run_experiment(config: PipelineConfig) -> classifier.ExperimentResult:
    seed = require_seed(config)
    rows = feature_rows(config)
    embeddings = resolve_embeddings(config)
    return classifier.run_experiment(
        rows, embeddings, config.network, seed=seed, split_ratio=config.split_ratio
    )


def run_train(config: PipelineConfig) -> classifier.ExperimentResult:
    result = run_experiment(config)
    classifier.save_model(result.fusion_model, output_path(config, FUSION_MODEL_FILE))
    classifier.save_model(
        result.baseline_model, output_path(config, BASELINE_MODEL_FILE)
    )
    return result


def run_eval(config: PipelineConfig) -> classifier.ExperimentResult:
    result = run_experiment(config)
    classifier.write_evaluation_csv(result, output_path(config, EVALUATION_FILE))
    return result


def run_export(config: PipelineConfig) -> Tuple[str, int]:
    result = run_experiment(config)
    uri = output_path(config, PROJECTION_FILE)
    count = classifier.write_projection_csv(result.projection, uri)
    logger.info(f"Exported {count} combined vectors -> {uri}")
    return uri, count


def run_demo(
    out_dir: str, seed: int = 0, n_users: int = demo.DEFAULT_DEMO_USERS, **overrides
) -> classifier.ExperimentResult:
    """
    Generates the demo corpus into ``out_dir`` and runs every stage on it.

    Returns the evaluation result of the paired models.
    """
    config_path = demo.write_demo_corpus(out_dir, seed=seed, n_users=n_users)
    config = apply_overrides(load_config(str(config_path)), **overrides)
    logger.info(f"Running the demo pipeline with {Path(config_path).name}.")
    run_label(config)
    run_features(config)
    run_stats(config)
    run_summary(config)
    run_train(config)
    result = run_eval(config)
    run_export(config)
    return result
