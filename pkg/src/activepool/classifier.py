"""Multiclass probabilistic linear classifier (softmax regression).

Trained by full-batch gradient descent on L2-regularized multinomial
cross-entropy, starting from zero weights. The objective is convex, so
zero initialization is safe and training is deterministic. Every query
strategy consumes the calibrated posteriors this model produces.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

CHECKPOINT_MAGIC = "alm1"
ROW_SUM_TOL = 1e-9


class ShapeError(ValueError):
    """Feature/parameter dimensions do not line up."""


class TrainingError(ValueError):
    """Training preconditions violated (e.g. fewer than two classes)."""


@dataclass(frozen=True)
class TrainConfig:
    l2_penalty: float = 1e-3
    learning_rate: float = 0.1
    max_epochs: int = 500
    convergence_tol: float = 1e-6
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.l2_penalty < 0:
            raise ValueError("l2_penalty must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")


@dataclass(frozen=True)
class ModelParams:
    """Trained parameters: per-class weight rows plus biases."""

    weights: np.ndarray  # (num_classes, dimensionality)
    biases: np.ndarray  # (num_classes,)

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        object.__setattr__(self, "biases", np.asarray(self.biases, dtype=np.float64))
        if self.weights.ndim != 2 or self.biases.ndim != 1:
            raise ShapeError("weights must be 2-d and biases 1-d")
        if self.weights.shape[0] != self.biases.shape[0]:
            raise ShapeError("weights and biases disagree on class count")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.biases))):
            raise ValueError("model parameters must be finite")

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dimensionality(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class PosteriorMatrix:
    """Row-stochastic class-probability matrix with row-aligned instance ids."""

    values: np.ndarray  # (n, m)
    instance_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        object.__setattr__(self, "instance_ids", tuple(self.instance_ids))
        if self.values.ndim != 2:
            raise ShapeError("posterior matrix must be 2-d")
        if len(self.instance_ids) != self.values.shape[0]:
            raise ShapeError("instance_ids must align with rows")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("posteriors must be finite")
        if np.any(self.values < 0) or np.any(self.values > 1):
            raise ValueError("posteriors must lie in [0, 1]")
        if np.any(np.abs(self.values.sum(axis=1) - 1.0) > ROW_SUM_TOL):
            raise ValueError("posterior rows must sum to 1")

    @property
    def num_rows(self) -> int:
        return self.values.shape[0]

    @property
    def num_classes(self) -> int:
        return self.values.shape[1]


def _as_matrix(features: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ShapeError("features must form a 2-d matrix")
    return X


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def loss_and_gradient(
    model: ModelParams,
    features: np.ndarray,
    classes: np.ndarray,
    l2_penalty: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus 0.5*l2*||W||^2, with its analytic gradient.

    Returns (loss, weight gradient, bias gradient). Biases are not
    regularized.
    """
    X = _as_matrix(features)
    y = np.asarray(classes, dtype=np.int64)
    n = X.shape[0]
    if X.shape[1] != model.dimensionality:
        raise ShapeError(f"features have {X.shape[1]} dims, model expects {model.dimensionality}")
    logits = X @ model.weights.T + model.biases
    log_probs = _log_softmax(logits)
    loss = -float(log_probs[np.arange(n), y].mean())
    loss += 0.5 * l2_penalty * float((model.weights**2).sum())
    probs = np.exp(log_probs)
    residual = probs
    residual[np.arange(n), y] -= 1.0
    residual /= n
    grad_w = residual.T @ X + l2_penalty * model.weights
    grad_b = residual.sum(axis=0)
    return loss, grad_w, grad_b


def train_history(
    features: np.ndarray,
    classes: np.ndarray,
    cfg: TrainConfig,
    num_classes: int | None = None,
) -> tuple[ModelParams, list[float]]:
    """Like :func:`train` but also returns the per-epoch loss trace."""
    X = _as_matrix(features)
    y = np.asarray(classes, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise ShapeError("features and classes disagree on example count")
    if X.shape[0] == 0:
        raise TrainingError("no training examples")
    distinct = np.unique(y)
    if distinct.size < 2:
        raise TrainingError("training requires examples from at least 2 classes")
    m = int(distinct.max()) + 1 if num_classes is None else num_classes
    if num_classes is not None and distinct.max() >= num_classes:
        raise TrainingError("class index out of range for declared num_classes")

    model = ModelParams(np.zeros((m, X.shape[1])), np.zeros(m))
    losses: list[float] = []
    for _ in range(cfg.max_epochs):
        loss, grad_w, grad_b = loss_and_gradient(model, X, y, cfg.l2_penalty)
        losses.append(loss)
        grad_max = max(float(np.abs(grad_w).max()), float(np.abs(grad_b).max()))
        if grad_max <= cfg.convergence_tol:
            break
        model = ModelParams(
            model.weights - cfg.learning_rate * grad_w,
            model.biases - cfg.learning_rate * grad_b,
        )
    return model, losses


def train(
    features: np.ndarray,
    classes: np.ndarray,
    cfg: TrainConfig = TrainConfig(),
    num_classes: int | None = None,
) -> ModelParams:
    """Fit softmax regression; deterministic given the config.

    ``num_classes`` widens the output layer beyond the classes observed in
    ``classes`` (needed when a resample happens to miss a class).
    """
    model, _ = train_history(features, classes, cfg, num_classes)
    return model


def posterior_values(model: ModelParams, features: np.ndarray) -> np.ndarray:
    """Raw softmax rows without the PosteriorMatrix wrapper (hot path)."""
    X = _as_matrix(features)
    if X.shape[1] != model.dimensionality:
        raise ShapeError(f"features have {X.shape[1]} dims, model expects {model.dimensionality}")
    log_probs = _log_softmax(X @ model.weights.T + model.biases)
    probs = np.exp(log_probs)
    probs /= probs.sum(axis=1, keepdims=True)
    return probs


def predict_proba(
    model: ModelParams,
    features: np.ndarray,
    instance_ids: Sequence[str] | None = None,
) -> PosteriorMatrix:
    """Row i = softmax(W @ x_i + b); rows sum to 1 by construction."""
    probs = posterior_values(model, features)
    if instance_ids is None:
        instance_ids = tuple(str(i) for i in range(probs.shape[0]))
    return PosteriorMatrix(values=probs, instance_ids=tuple(instance_ids))


def predict_classes(model: ModelParams, features: np.ndarray) -> np.ndarray:
    """Argmax-posterior class per instance; ties broken by lowest class index."""
    return np.argmax(posterior_values(model, features), axis=1)


def accuracy(model: ModelParams, features: np.ndarray, classes: np.ndarray) -> float:
    """Fraction of argmax predictions matching the given classes."""
    y = np.asarray(classes, dtype=np.int64)
    if y.size == 0:
        raise ValueError("empty test set")
    return float(np.mean(predict_classes(model, features) == y))


def serialize_model(model: ModelParams) -> str:
    """Versioned flat text: magic line, dims line, one weight row per line, bias line."""
    lines = [CHECKPOINT_MAGIC, f"{model.num_classes} {model.dimensionality}"]
    for row in model.weights:
        lines.append(" ".join(format(v, ".17g") for v in row))
    lines.append(" ".join(format(v, ".17g") for v in model.biases))
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> ModelParams:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise ValueError(f"not a {CHECKPOINT_MAGIC} checkpoint")
    m, d = (int(tok) for tok in lines[1].split())
    if len(lines) != 2 + m + 1:
        raise ValueError("checkpoint line count does not match declared dims")
    weights = np.array([[float(tok) for tok in lines[2 + i].split()] for i in range(m)])
    biases = np.array([float(tok) for tok in lines[2 + m].split()])
    if weights.shape != (m, d) or biases.shape != (m,):
        raise ValueError("checkpoint value counts do not match declared dims")
    return ModelParams(weights, biases)


def save_model(model: ModelParams, path: str | Path) -> None:
    Path(path).write_text(serialize_model(model), encoding="utf-8")


def load_model(path: str | Path) -> ModelParams:
    return parse_model(Path(path).read_text(encoding="utf-8"))
