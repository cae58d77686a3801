"""
A single-hidden-layer feed-forward binary classifier written with numpy.

Layout: inputs -> dense (ReLU) -> dense (1 unit) -> sigmoid. Training
minimizes (optionally class-weighted) binary cross-entropy with plain
mini-batch gradient descent. All randomness comes from one seeded generator,
so a seed and a dataset fully determine the trained parameters.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .config import NetworkConfig

logger = logging.getLogger(__name__)

PARAMETER_NAMES = ("w1", "b1", "w2", "b2")
_PROBABILITY_FLOOR = np.finfo(float).tiny
_PROBABILITY_CEILING = 1.0 - np.finfo(float).epsneg


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass
class FusionModel:
    """
    Trained network parameters plus the feature normalization they expect.

    ``feature_mean``/``feature_std`` are empty for an embedding-only model.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    seed: int
    embedding_dim: int
    feature_mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    feature_std: np.ndarray = field(default_factory=lambda: np.ones(0))
    loss_history: List[float] = field(default_factory=list)

    @property
    def n_inputs(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden_units(self) -> int:
        return self.w1.shape[1]

    @property
    def n_features(self) -> int:
        return self.feature_mean.shape[0]

    def parameters(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAMETER_NAMES}


def sigmoid(z: np.ndarray) -> np.ndarray:
    # tanh form never overflows and gives exactly 0.5 at 0.
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def glorot_limit(fan_in: int, fan_out: int) -> float:
    return math.sqrt(6.0 / (fan_in + fan_out))


def initialize_model(
    n_inputs: int, hidden_units: int, seed: int, embedding_dim: Optional[int] = None
) -> FusionModel:
    """Uniform Glorot weights drawn from ``seed``, zero biases."""
    rng = np.random.default_rng(seed)
    return _initialize(n_inputs, hidden_units, rng, seed, embedding_dim)


def _initialize(
    n_inputs: int,
    hidden_units: int,
    rng: np.random.Generator,
    seed: int,
    embedding_dim: Optional[int],
) -> FusionModel:
    limit1 = glorot_limit(n_inputs, hidden_units)
    limit2 = glorot_limit(hidden_units, 1)
    return FusionModel(
        w1=rng.uniform(-limit1, limit1, size=(n_inputs, hidden_units)),
        b1=np.zeros(hidden_units),
        w2=rng.uniform(-limit2, limit2, size=(hidden_units, 1)),
        b2=np.zeros(1),
        seed=seed,
        embedding_dim=n_inputs if embedding_dim is None else embedding_dim,
    )


def _forward(
    model: FusionModel, inputs: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    z1 = inputs @ model.w1 + model.b1
    a1 = np.maximum(z1, 0.0)
    logits = (a1 @ model.w2 + model.b2)[:, 0]
    return z1, a1, logits


def loss_and_gradients(
    model: FusionModel,
    inputs: np.ndarray,
    labels: np.ndarray,
    sample_weight: Optional[np.ndarray] = None,
) -> Tuple[float, Dict[str, np.ndarray]]:
    """
    Mean weighted binary cross-entropy and its gradient for every parameter.

    The loss is ``sum(w_i * bce_i) / n``, so unit weights give the plain mean.
    """
    n = inputs.shape[0]
    if sample_weight is None:
        weights = np.ones(n)
    else:
        weights = np.asarray(sample_weight, dtype=float)
    z1, a1, logits = _forward(model, inputs)

    # softplus(z) - y*z is the cross-entropy of sigmoid(z), stable for any z.
    per_example = np.logaddexp(0.0, logits) - labels * logits
    loss = float(np.sum(weights * per_example) / n)

    d_logits = weights * (sigmoid(logits) - labels) / n
    d_hidden = np.outer(d_logits, model.w2[:, 0]) * (z1 > 0)
    gradients = {
        "w1": inputs.T @ d_hidden,
        "b1": d_hidden.sum(axis=0),
        "w2": a1.T @ d_logits[:, None],
        "b2": np.array([d_logits.sum()]),
    }
    return loss, gradients


def class_weights(labels: np.ndarray) -> np.ndarray:
    """Inverse class frequency per example, ``n / (2 * n_class)``."""
    n = labels.shape[0]
    n_pos = float(labels.sum())
    n_neg = n - n_pos
    return np.where(labels == 1, n / (2.0 * n_pos), n / (2.0 * n_neg))


def train(
    inputs: np.ndarray,
    labels: np.ndarray,
    config: NetworkConfig,
    seed: int,
    embedding_dim: Optional[int] = None,
) -> FusionModel:
    """
    Trains a fresh network with mini-batch gradient descent.

    ``loss_history[0]`` is the full-data loss at initialization and each later
    entry the full-data loss after one epoch.
    """
    inputs = np.asarray(inputs, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if inputs.ndim != 2 or inputs.shape[0] != labels.shape[0]:
        raise ValueError("inputs must be a 2-D matrix with one row per label")
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == labels.shape[0]:
        raise ValueError("training needs at least one example of each class")

    rng = np.random.default_rng(seed)
    model = _initialize(inputs.shape[1], config.hidden_units, rng, seed, embedding_dim)
    if config.class_weighting:
        weights = class_weights(labels)
    else:
        weights = np.ones(labels.shape[0])

    def full_loss() -> float:
        loss, _ = loss_and_gradients(model, inputs, labels, weights)
        if not math.isfinite(loss):
            raise TrainingDivergedError(
                f"Training loss became {loss}; the learning rate "
                f"{config.learning_rate} is probably too high."
            )
        return loss

    model.loss_history.append(full_loss())
    n = inputs.shape[0]
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            _, gradients = loss_and_gradients(
                model, inputs[batch], labels[batch], weights[batch]
            )
            for name in PARAMETER_NAMES:
                getattr(model, name)[...] -= config.learning_rate * gradients[name]
        model.loss_history.append(full_loss())
        if epoch == 1 or epoch % 10 == 0 or epoch == config.epochs:
            logger.debug(
                f"epoch {epoch}/{config.epochs}: loss {model.loss_history[-1]:.6f}"
            )

    logger.info(
        f"Trained {inputs.shape[1]}->{config.hidden_units}->1 network for "
        f"{config.epochs} epoch(s): loss {model.loss_history[0]:.4f} -> "
        f"{model.loss_history[-1]:.4f}"
    )
    return model


def predict_batch(model: FusionModel, inputs: np.ndarray) -> np.ndarray:
    """Probabilities of the positive class, strictly inside (0, 1)."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if inputs.shape[1] != model.n_inputs:
        raise ValueError(
            f"Input width {inputs.shape[1]} does not match the model's {model.n_inputs}"
        )
    _, _, logits = _forward(model, inputs)
    return np.clip(sigmoid(logits), _PROBABILITY_FLOOR, _PROBABILITY_CEILING)


def predict(model: FusionModel, h: np.ndarray) -> float:
    h = np.asarray(h, dtype=float)
    if h.ndim != 1:
        raise ValueError("predict expects a single input vector")
    return float(predict_batch(model, h)[0])
