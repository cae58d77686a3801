"""
Tests for normalization, the stratified split, evaluation and the fusion
experiment.
"""
import json
from pathlib import Path

import numpy as np
import pytest
from py_profile_spreaders.classifier import (
    EVALUATION_HEADER,
    EvalReport,
    FusionInput,
    ModelFormatError,
    classify,
    evaluate,
    load_model,
    normalize_features,
    run_experiment,
    save_model,
    split,
    write_evaluation_csv,
    write_projection_csv,
)
from py_profile_spreaders.config import NetworkConfig
from py_profile_spreaders.corpus import SpreaderClass
from py_profile_spreaders.embeddings import EmbeddingTable
from py_profile_spreaders.features import FeatureVector, LabeledFeatureRow
from py_profile_spreaders.network import PARAMETER_NAMES

FAKE, REAL = SpreaderClass.FAKE, SpreaderClass.REAL
SMALL_NETWORK = NetworkConfig(hidden_units=8, learning_rate=0.05, epochs=10)


def row(user_id, label, values, mask=None):
    return LabeledFeatureRow(
        user_id=user_id,
        label=label,
        features=FeatureVector(
            values=tuple(float(v) for v in values),
            missing_mask=tuple(mask) if mask else (False,) * 10,
        ),
    )


def synthetic_population(n_users: int, dim: int, seed: int, shift: float = 1.5):
    """
    Rows whose ten features are N(+shift, 1) for fake spreaders and
    N(-shift, 1) for real ones, paired with random unit-norm embeddings that
    carry no class signal.
    """
    rng = np.random.default_rng(seed)
    rows, vectors = [], {}
    for i in range(n_users):
        label = FAKE if i % 2 == 0 else REAL
        center = shift if label is FAKE else -shift
        user_id = f"user{i:05d}"
        rows.append(row(user_id, label, rng.normal(center, 1.0, size=10)))
        vector = rng.normal(size=dim)
        vectors[user_id] = vector / np.linalg.norm(vector)
    return rows, EmbeddingTable(dim=dim, vectors=vectors)


# --- evaluation --------------------------------------------------------------


def test_eval_report_worked_example():
    labels = [FAKE] * 5 + [REAL] * 5
    predictions = [FAKE] * 4 + [REAL] + [FAKE] + [REAL] * 4
    report = evaluate(predictions, labels)
    assert (report.tp, report.fp, report.tn, report.fn) == (4, 1, 4, 1)
    assert report.accuracy == pytest.approx(0.8)
    assert report.precision == pytest.approx(0.8)
    assert report.recall == pytest.approx(0.8)
    assert report.f1 == pytest.approx(0.8)


def test_perfect_and_degenerate_reports():
    labels = [FAKE, REAL, FAKE]
    perfect = evaluate(labels, labels)
    assert perfect.accuracy == 1.0 and perfect.f1 == 1.0

    never_fake = evaluate([REAL, REAL, REAL], labels)
    assert never_fake.tp == 0
    assert never_fake.precision == 0.0
    assert never_fake.f1 == 0.0
    assert never_fake.accuracy == pytest.approx(1 / 3)


def test_evaluate_argument_errors():
    with pytest.raises(ValueError):
        evaluate([FAKE], [FAKE, REAL])
    with pytest.raises(ValueError):
        evaluate([], [])


def test_metric_identities_on_random_predictions():
    rng = np.random.default_rng(12)
    for _ in range(25):
        n = int(rng.integers(1, 80))
        labels = [FAKE if v else REAL for v in rng.integers(0, 2, size=n)]
        predictions = [FAKE if v else REAL for v in rng.integers(0, 2, size=n)]
        report = evaluate(predictions, labels)
        assert report.total == n
        assert report.tp + report.fn == labels.count(FAKE)
        assert report.tp + report.fp == predictions.count(FAKE)
        assert 0.0 <= report.accuracy <= 1.0
        assert 0.0 <= report.f1 <= 1.0
        if report.tp:
            expected = 2 * report.tp / (2 * report.tp + report.fp + report.fn)
            assert report.f1 == pytest.approx(expected)


def test_classify_threshold():
    assert classify(0.5) is FAKE
    assert classify(0.4999) is REAL
    assert classify(0.9, threshold=0.95) is REAL


# --- normalization -----------------------------------------------------------


def test_normalization_uses_training_statistics():
    rows = [
        row("a", FAKE, [0.0] + [3.0] * 9),
        row("b", REAL, [4.0] + [3.0] * 9),
        row("c", FAKE, [4.0] + [100.0] * 9),
    ]
    normalized, params = normalize_features(rows, ["a", "b"])
    assert params.mean[0] == 2.0
    assert params.std[0] == 2.0
    assert normalized["c"][0] == 1.0
    assert normalized["a"][0] == -1.0
    # Constant in training: deviation replaced by 1, training users map to 0.
    assert params.std[1] == 1.0
    assert normalized["a"][1] == 0.0
    assert normalized["c"][1] == 97.0


def test_test_users_do_not_leak_into_statistics():
    base = [row("a", FAKE, range(10)), row("b", REAL, range(1, 11))]
    _, first = normalize_features(base + [row("c", FAKE, [5.0] * 10)], ["a", "b"])
    _, second = normalize_features(base + [row("c", FAKE, [-500.0] * 10)], ["a", "b"])
    np.testing.assert_array_equal(first.mean, second.mean)
    np.testing.assert_array_equal(first.std, second.std)


def test_masked_values_are_ignored_and_become_zero():
    mask = [True] + [False] * 9
    rows = [
        row("a", FAKE, [0.0] * 10, mask),
        row("b", REAL, [2.0] * 10),
        row("c", REAL, [6.0] * 10),
    ]
    normalized, params = normalize_features(rows, ["a", "b", "c"])
    assert params.mean[0] == 4.0
    assert params.mean[1] == pytest.approx(8.0 / 3)
    assert normalized["a"][0] == 0.0


def test_normalization_needs_training_users():
    with pytest.raises(ValueError):
        normalize_features([row("a", FAKE, [0.0] * 10)], [])


def test_fusion_input_layout():
    x = FusionInput(h_b=np.array([0.1, 0.2, 0.3]), h_f=np.arange(10.0))
    assert x.h.shape == (13,)
    np.testing.assert_array_equal(x.h[:3], [0.1, 0.2, 0.3])
    np.testing.assert_array_equal(x.h[3:], np.arange(10.0))


# --- split -------------------------------------------------------------------


def population_for_split():
    return [row(f"u{i:03d}", FAKE if i < 30 else REAL, [float(i)] * 10) for i in range(100)]


def test_split_is_stratified():
    train_rows, test_rows = split(population_for_split(), ratio=0.8, seed=3)
    assert len(train_rows) == 80 and len(test_rows) == 20
    n_fake = sum(1 for r in train_rows if r.label is FAKE)
    assert 23 <= n_fake <= 25
    assert {r.user_id for r in train_rows}.isdisjoint(r.user_id for r in test_rows)


def test_split_is_deterministic_and_order_independent():
    rows = population_for_split()
    first = split(rows, 0.8, seed=5)
    second = split(list(reversed(rows)), 0.8, seed=5)
    assert [r.user_id for r in first[0]] == [r.user_id for r in second[0]]
    other = split(rows, 0.8, seed=6)
    assert {r.user_id for r in other[1]} != {r.user_id for r in first[1]}


@pytest.mark.parametrize("ratio", [0.2, 0.5, 0.8, 0.99])
def test_split_with_two_rows_per_class(ratio):
    """The smallest valid input keeps one row of each class on each side."""
    rows = [row(f"f{i}", FAKE, [0.0] * 10) for i in range(2)] + [
        row(f"r{i}", REAL, [0.0] * 10) for i in range(2)
    ]
    train_rows, test_rows = split(rows, ratio, seed=0)
    for part in (train_rows, test_rows):
        assert sorted(r.label.value for r in part) == sorted([FAKE.value, REAL.value])


def test_split_clamps_tiny_ratio():
    rows = [row(f"f{i}", FAKE, [0.0] * 10) for i in range(3)] + [
        row(f"r{i}", REAL, [0.0] * 10) for i in range(7)
    ]
    train_rows, test_rows = split(rows, 0.01, seed=1)
    assert sum(r.label is FAKE for r in train_rows) == 1
    assert sum(r.label is REAL for r in train_rows) == 1
    assert len(test_rows) == 8


def test_split_errors():
    rows = [row("a", FAKE, [0.0] * 10)] + [row(f"r{i}", REAL, [0.0] * 10) for i in range(5)]
    with pytest.raises(ValueError, match="FakeSpreader"):
        split(rows)
    with pytest.raises(ValueError):
        split(population_for_split(), ratio=1.0)


# --- experiment --------------------------------------------------------------


def test_features_lift_the_embedding_baseline():
    """
    Tests that on a population where only the features separate the classes
    the fusion model clearly beats the embedding-only model.
    """
    rows, embeddings = synthetic_population(2000, dim=16, seed=21)
    network = NetworkConfig(hidden_units=16, learning_rate=0.05, epochs=30)
    result = run_experiment(rows, embeddings, network, seed=0)

    assert len(result.test_ids) == 400
    assert result.fusion_report.f1 >= 0.85
    assert result.fusion_report.f1 >= result.baseline_report.f1 + 0.05
    assert result.baseline_model.n_inputs == 16
    assert result.fusion_model.n_inputs == 26
    assert result.fusion_model.n_features == 10
    assert result.baseline_model.n_features == 0


def test_same_seed_gives_identical_results():
    rows, embeddings = synthetic_population(120, dim=8, seed=2)
    first = run_experiment(rows, embeddings, SMALL_NETWORK, seed=4)
    second = run_experiment(list(reversed(rows)), embeddings, SMALL_NETWORK, seed=4)
    assert first.fusion_report == second.fusion_report
    assert first.baseline_report == second.baseline_report
    assert first.test_ids == second.test_ids
    for name in PARAMETER_NAMES:
        np.testing.assert_array_equal(
            getattr(first.fusion_model, name), getattr(second.fusion_model, name)
        )


def test_users_without_embedding_are_dropped():
    rows, embeddings = synthetic_population(60, dim=4, seed=3)
    del embeddings.vectors["user00007"]
    result = run_experiment(rows, embeddings, SMALL_NETWORK, seed=0)
    assert result.dropped_users == ["user00007"]
    assert len(result.projection) == 59
    assert "user00007" not in result.train_ids + result.test_ids
    user_id, label, h = result.projection[0]
    assert (user_id, label) == ("user00000", FAKE)
    assert h.shape == (14,)


# --- persistence -------------------------------------------------------------


def test_model_round_trip(tmp_path: Path):
    rows, embeddings = synthetic_population(40, dim=4, seed=5)
    model = run_experiment(rows, embeddings, SMALL_NETWORK, seed=1).fusion_model
    uri = str(tmp_path / "model.json")
    save_model(model, uri)
    loaded = load_model(uri)
    for name in PARAMETER_NAMES:
        np.testing.assert_array_equal(getattr(loaded, name), getattr(model, name))
    np.testing.assert_array_equal(loaded.feature_mean, model.feature_mean)
    np.testing.assert_array_equal(loaded.feature_std, model.feature_std)
    assert loaded.loss_history == model.loss_history
    assert (loaded.seed, loaded.embedding_dim) == (1, 4)


def test_load_model_rejects_bad_files(tmp_path: Path):
    rows, embeddings = synthetic_population(40, dim=4, seed=5)
    model = run_experiment(rows, embeddings, SMALL_NETWORK, seed=1).baseline_model
    uri = tmp_path / "model.json"
    save_model(model, str(uri))
    data = json.loads(uri.read_text(encoding="utf-8"))

    data["format_version"] = 2
    uri.write_text(json.dumps(data), encoding="utf-8")
    with pytest.raises(ModelFormatError, match="version"):
        load_model(str(uri))

    uri.write_text("{not json", encoding="utf-8")
    with pytest.raises(ModelFormatError):
        load_model(str(uri))

    data["format_version"] = 1
    data["b1"] = [0.0]
    uri.write_text(json.dumps(data), encoding="utf-8")
    with pytest.raises(ModelFormatError):
        load_model(str(uri))


def test_result_csv_exports(tmp_path: Path):
    rows, embeddings = synthetic_population(40, dim=3, seed=8)
    result = run_experiment(rows, embeddings, SMALL_NETWORK, seed=2)

    evaluation = tmp_path / "evaluation.csv"
    write_evaluation_csv(result, str(evaluation))
    lines = evaluation.read_text(encoding="utf-8").splitlines()
    assert lines[0].split(",") == EVALUATION_HEADER
    assert lines[1].startswith("embedding,")
    assert lines[2].startswith("embedding+features,")
    assert float(lines[2].split(",")[1]) == result.fusion_report.accuracy

    projection = tmp_path / "projection.csv"
    assert write_projection_csv(result.projection, str(projection)) == 40
    lines = projection.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "user_id,label," + ",".join(f"h{i}" for i in range(13))
    assert lines[1].startswith("user00000,FakeSpreader,")
    assert len(lines) == 41


def test_eval_report_defaults_to_fake_positive_class():
    assert EvalReport(tp=1, fp=0, tn=0, fn=0).positive_class is FAKE


def test_uninformative_inputs_give_majority_accuracy():
    """
    Tests that when labels are independent of features and embeddings both
    models end up near the majority-class accuracy.
    """
    rng = np.random.default_rng(30)
    rows, vectors = [], {}
    for i in range(2000):
        user_id = f"user{i:05d}"
        rows.append(row(user_id, FAKE if i % 5 == 0 else REAL, rng.normal(size=10)))
        vector = rng.normal(size=16)
        vectors[user_id] = vector / np.linalg.norm(vector)
    network = NetworkConfig(hidden_units=16, learning_rate=0.05, epochs=30)

    result = run_experiment(rows, EmbeddingTable(dim=16, vectors=vectors), network, seed=0)

    for report in (result.baseline_report, result.fusion_report):
        assert abs(report.accuracy - 0.8) <= 0.05
