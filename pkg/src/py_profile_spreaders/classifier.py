"""
The fusion classifier: user embeddings extended with the motivational features.

For every user the fusion input is the embedding ``h_b`` followed by the
z-scored feature vector ``h_f``. Two networks are trained on one stratified
split with one seed: an embedding-only baseline (input width ``dim``) and the
fusion model (input width ``dim + 10``). Both are evaluated on the held-out
users with FakeSpreader as the positive class.
"""

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import fsspec
import numpy as np
from sklearn.metrics import confusion_matrix

from .config import NetworkConfig
from .corpus import SpreaderClass
from .embeddings import EmbeddingTable
from .features import N_FEATURES, LabeledFeatureRow
from .network import FusionModel, predict_batch, train

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
DECISION_THRESHOLD = 0.5
EVALUATION_HEADER = ["model", "accuracy", "f1", "tp", "fp", "tn", "fn"]
BASELINE_MODEL_NAME = "embedding"
FUSION_MODEL_NAME = "embedding+features"


class ModelFormatError(ValueError):
    """Raised for a model file that cannot be loaded."""


@dataclass(frozen=True)
class FusionInput:
    h_b: np.ndarray
    h_f: np.ndarray

    @property
    def h(self) -> np.ndarray:
        return np.concatenate([self.h_b, self.h_f])


@dataclass(frozen=True)
class NormalizationParams:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, row: LabeledFeatureRow) -> np.ndarray:
        """Z-scores one row; masked entries take the training mean, i.e. 0."""
        values = np.asarray(row.features.values, dtype=float)
        mask = np.asarray(row.features.missing_mask, dtype=bool)
        normalized = (values - self.mean) / self.std
        normalized[mask] = 0.0
        return normalized


@dataclass(frozen=True)
class EvalReport:
    """Confusion counts with FakeSpreader as the positive class."""

    tp: int
    fp: int
    tn: int
    fn: int
    positive_class: SpreaderClass = SpreaderClass.FAKE

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total

    @property
    def precision(self) -> float:
        predicted = self.tp + self.fp
        return self.tp / predicted if predicted else 0.0

    @property
    def recall(self) -> float:
        actual = self.tp + self.fn
        return self.tp / actual if actual else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        if p + r == 0:
            return 0.0
        return 2 * p * r / (p + r)


@dataclass
class ExperimentResult:
    baseline_report: EvalReport
    fusion_report: EvalReport
    baseline_model: FusionModel
    fusion_model: FusionModel
    train_ids: List[str]
    test_ids: List[str]
    # (user_id, label, h) for every user that took part, sorted by user_id.
    projection: List[Tuple[str, SpreaderClass, np.ndarray]] = field(
        default_factory=list
    )
    dropped_users: List[str] = field(default_factory=list)


def classify(
    probability: float, threshold: float = DECISION_THRESHOLD
) -> SpreaderClass:
    return SpreaderClass.FAKE if probability >= threshold else SpreaderClass.REAL


def _as_targets(labels: Iterable[SpreaderClass]) -> np.ndarray:
    return np.array(
        [1 if label is SpreaderClass.FAKE else 0 for label in labels], dtype=int
    )


def normalize_features(
    rows: Sequence[LabeledFeatureRow], training_ids: Iterable[str]
) -> Tuple[Dict[str, np.ndarray], NormalizationParams]:
    """
    Z-scores every row with statistics of the training users only.

    Per feature, the mean and the population standard deviation are taken over
    the unmasked training values. A zero deviation, or a feature with no
    training value at all, is replaced by 1.
    """
    training_ids = set(training_ids)
    if not training_ids:
        raise ValueError("normalize_features needs at least one training user")

    training = sorted(
        (row for row in rows if row.user_id in training_ids),
        key=lambda row: row.user_id,
    )
    mean = np.zeros(N_FEATURES)
    std = np.ones(N_FEATURES)
    for index in range(N_FEATURES):
        observed = np.array(
            [
                r.features.values[index]
                for r in training
                if not r.features.missing_mask[index]
            ],
            dtype=float,
        )
        if observed.size == 0:
            continue
        mean[index] = observed.mean()
        spread = observed.std()
        std[index] = spread if spread > 0 else 1.0

    params = NormalizationParams(mean=mean, std=std)
    return {row.user_id: params.apply(row) for row in rows}, params


def split(
    rows: Sequence[LabeledFeatureRow], ratio: float = 0.8, seed: int = 0
) -> Tuple[List[LabeledFeatureRow], List[LabeledFeatureRow]]:
    """
    Stratified train/test split, deterministic under ``seed``.

    Each class keeps ``round(ratio * n)`` rows for training, clamped so that
    both sides receive at least one row of it.
    """
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must lie strictly between 0 and 1, got {ratio}")
    rng = np.random.default_rng(seed)
    train_rows: List[LabeledFeatureRow] = []
    test_rows: List[LabeledFeatureRow] = []
    for cls in SpreaderClass:
        members = sorted(
            (row for row in rows if row.label is cls), key=lambda row: row.user_id
        )
        n = len(members)
        if n < 2:
            raise ValueError(
                f"Class {cls.value} has {n} row(s); a split needs at least 2"
            )
        n_train = min(max(round(ratio * n), 1), n - 1)
        order = rng.permutation(n)
        train_rows.extend(members[i] for i in order[:n_train])
        test_rows.extend(members[i] for i in order[n_train:])
    train_rows.sort(key=lambda row: row.user_id)
    test_rows.sort(key=lambda row: row.user_id)
    return train_rows, test_rows


def evaluate(
    predictions: Sequence[SpreaderClass], labels: Sequence[SpreaderClass]
) -> EvalReport:
    if len(predictions) != len(labels):
        raise ValueError(
            f"{len(predictions)} predictions for {len(labels)} labels"
        )
    if not labels:
        raise ValueError("Cannot evaluate an empty prediction set")
    tn, fp, fn, tp = confusion_matrix(
        _as_targets(labels), _as_targets(predictions), labels=[0, 1]
    ).ravel()
    return EvalReport(tp=int(tp), fp=int(fp), tn=int(tn), fn=int(fn))


def _predict_labels(model: FusionModel, inputs: np.ndarray) -> List[SpreaderClass]:
    return [classify(p) for p in predict_batch(model, inputs)]


def run_experiment(
    rows: Sequence[LabeledFeatureRow],
    embeddings: EmbeddingTable,
    network: NetworkConfig,
    seed: int,
    split_ratio: float = 0.8,
) -> ExperimentResult:
    """
    Trains and evaluates the embedding-only and the fusion model as a pair.

    Users without an embedding are dropped with a warning. The two models share
    the split, the seed and every hyperparameter; only the feature block of the
    input differs.
    """
    dropped = sorted(row.user_id for row in rows if row.user_id not in embeddings)
    if dropped:
        logger.warning(
            f"Dropping {len(dropped)} user(s) without an embedding "
            f"(e.g. {', '.join(dropped[:3])})."
        )
    usable = [row for row in rows if row.user_id in embeddings]

    train_rows, test_rows = split(usable, split_ratio, seed)
    logger.info(
        f"Split {len(usable)} users into {len(train_rows)} train / "
        f"{len(test_rows)} test."
    )
    normalized, params = normalize_features(
        usable, [row.user_id for row in train_rows]
    )

    def fusion_input(row: LabeledFeatureRow) -> FusionInput:
        return FusionInput(
            h_b=embeddings.vectors[row.user_id], h_f=normalized[row.user_id]
        )

    def matrices(
        selected: Sequence[LabeledFeatureRow],
    ) -> Tuple[np.ndarray, np.ndarray]:
        inputs = [fusion_input(row) for row in selected]
        return np.array([x.h_b for x in inputs]), np.array([x.h for x in inputs])

    train_b, train_h = matrices(train_rows)
    test_b, test_h = matrices(test_rows)
    y_train = _as_targets(row.label for row in train_rows)
    test_labels = [row.label for row in test_rows]

    logger.info(f"Training the {BASELINE_MODEL_NAME} model.")
    baseline = train(train_b, y_train, network, seed, embedding_dim=embeddings.dim)
    logger.info(f"Training the {FUSION_MODEL_NAME} model.")
    fusion = train(train_h, y_train, network, seed, embedding_dim=embeddings.dim)
    fusion.feature_mean = params.mean
    fusion.feature_std = params.std

    baseline_report = evaluate(_predict_labels(baseline, test_b), test_labels)
    fusion_report = evaluate(_predict_labels(fusion, test_h), test_labels)
    for name, report in (
        (BASELINE_MODEL_NAME, baseline_report),
        (FUSION_MODEL_NAME, fusion_report),
    ):
        logger.info(f"{name}: accuracy {report.accuracy:.4f}, F1 {report.f1:.4f}")

    projection = [
        (row.user_id, row.label, fusion_input(row).h)
        for row in sorted(usable, key=lambda r: r.user_id)
    ]
    return ExperimentResult(
        baseline_report=baseline_report,
        fusion_report=fusion_report,
        baseline_model=baseline,
        fusion_model=fusion,
        train_ids=sorted(row.user_id for row in train_rows),
        test_ids=sorted(row.user_id for row in test_rows),
        projection=projection,
        dropped_users=dropped,
    )


def model_to_dict(model: FusionModel) -> Dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "seed": model.seed,
        "embedding_dim": model.embedding_dim,
        "n_inputs": model.n_inputs,
        "hidden_units": model.hidden_units,
        "feature_mean": model.feature_mean.tolist(),
        "feature_std": model.feature_std.tolist(),
        "w1": model.w1.tolist(),
        "b1": model.b1.tolist(),
        "w2": model.w2.tolist(),
        "b2": model.b2.tolist(),
        "loss_history": list(model.loss_history),
    }


def model_from_dict(data: Dict) -> FusionModel:
    version = data.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"Unsupported model format version: {version!r}")
    try:
        model = FusionModel(
            w1=np.array(data["w1"], dtype=float).reshape(
                data["n_inputs"], data["hidden_units"]
            ),
            b1=np.array(data["b1"], dtype=float),
            w2=np.array(data["w2"], dtype=float).reshape(data["hidden_units"], 1),
            b2=np.array(data["b2"], dtype=float),
            seed=int(data["seed"]),
            embedding_dim=int(data["embedding_dim"]),
            feature_mean=np.array(data["feature_mean"], dtype=float),
            feature_std=np.array(data["feature_std"], dtype=float),
            loss_history=[float(v) for v in data["loss_history"]],
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"Malformed model file: {e}") from e
    if model.b1.shape != (model.hidden_units,) or model.b2.shape != (1,):
        raise ModelFormatError("Bias shapes do not match the weight matrices")
    if not all(np.all(np.isfinite(p)) for p in model.parameters().values()):
        raise ModelFormatError("Model parameters must be finite")
    return model


def save_model(model: FusionModel, uri: str) -> None:
    """Writes the model as JSON; floats round-trip exactly."""
    with fsspec.open(uri, "w", encoding="utf-8") as f:
        f.write(json.dumps(model_to_dict(model), indent=1))
        f.write("\n")


def load_model(uri: str) -> FusionModel:
    try:
        with fsspec.open(uri, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{uri} is not valid JSON: {e}") from e
    return model_from_dict(data)


def write_evaluation_csv(result: ExperimentResult, uri: str) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(EVALUATION_HEADER)
    for name, r in (
        (BASELINE_MODEL_NAME, result.baseline_report),
        (FUSION_MODEL_NAME, result.fusion_report),
    ):
        writer.writerow([name, repr(r.accuracy), repr(r.f1), r.tp, r.fp, r.tn, r.fn])
    with fsspec.open(uri, "w", encoding="utf-8", newline="") as f:
        f.write(buffer.getvalue())


def write_projection_csv(
    projection: Sequence[Tuple[str, SpreaderClass, np.ndarray]], uri: str
) -> int:
    """Writes ``user_id,label,h0..`` rows for external 2-D projection."""
    width = len(projection[0][2]) if projection else 0
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["user_id", "label", *(f"h{i}" for i in range(width))])
    for user_id, label, h in projection:
        writer.writerow([user_id, label.value, *(repr(float(v)) for v in h)])
    with fsspec.open(uri, "w", encoding="utf-8", newline="") as f:
        f.write(buffer.getvalue())
    return len(projection)
