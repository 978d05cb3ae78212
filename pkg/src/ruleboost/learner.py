"""Multiclass linear weak models: cross-entropy training and KL self-training.

The weak learner is multiclass logistic regression over the hashed sparse
features. Self-training regenerates sharpened soft pseudo-labels from the
current model each epoch (square the predicted probabilities, divide by the
batch class mass, renormalize) and minimizes the mean KL divergence from the
pseudo-labels to the model output.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .data import Dataset, Instance, LabelSpace


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 20
    batch_size: int = 32
    l2: float = 1e-4
    self_train_epochs: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")
        if self.self_train_epochs < 0:
            raise ValueError("self_train_epochs must be >= 0")


@dataclass(frozen=True, eq=False)
class WeakModel:
    """One linear multiclass model plus its boosting bookkeeping."""

    weights: np.ndarray  # K x F
    bias: np.ndarray     # K
    err_t: float = 0.0
    alpha_t: float = 0.0
    iteration: int = 0

    def __post_init__(self) -> None:
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("model parameters must be finite")

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]


def to_design_matrix(instances: Sequence[Instance], space_size: int) -> sp.csr_matrix:
    """Stack instance feature vectors into a CSR matrix, one row per instance."""
    data: list[float] = []
    indices: list[int] = []
    indptr = [0]
    for inst in instances:
        if inst.features.size != space_size:
            raise ValueError(
                f"instance {inst.id} lives in feature space {inst.features.size}, "
                f"expected {space_size}"
            )
        for idx, val in inst.features.entries.items():
            indices.append(idx)
            data.append(val)
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(instances), space_size),
    )


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def predict_proba(model: WeakModel, x: Instance) -> np.ndarray:
    """softmax(Wx + b) for one instance: positive entries summing to 1."""
    if x.features.size != model.n_features:
        raise ValueError(
            f"feature space mismatch: {x.features.size} vs {model.n_features}"
        )
    logits = model.bias.copy()
    for idx, val in x.features.entries.items():
        logits += model.weights[:, idx] * val
    return _softmax(logits)


def predict_proba_batch(model: WeakModel, x_matrix: sp.csr_matrix) -> np.ndarray:
    return _softmax(x_matrix @ model.weights.T + model.bias)


def predict_labels(model: WeakModel, x_matrix: sp.csr_matrix) -> list[int]:
    """Argmax class ids (1-based); ties go to the lowest id."""
    probs = predict_proba_batch(model, x_matrix)
    return [int(c) + 1 for c in probs.argmax(axis=1)]


def ce_loss_and_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    x_matrix: sp.csr_matrix,
    labels: np.ndarray,
    l2: float = 0.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy (plus l2/2 * ||W||^2) with analytic gradients.

    ``labels`` are 0-based class indices here; the 1-based ids of the public
    API are shifted by the callers.
    """
    n = x_matrix.shape[0]
    logits = x_matrix @ weights.T + bias
    logz = logits - logits.max(axis=1, keepdims=True)
    log_probs = logz - np.log(np.exp(logz).sum(axis=1, keepdims=True))
    loss = -log_probs[np.arange(n), labels].mean() + 0.5 * l2 * float(
        (weights * weights).sum()
    )
    delta = np.exp(log_probs)
    delta[np.arange(n), labels] -= 1.0
    delta /= n
    grad_w = np.asarray((x_matrix.T @ delta).T) + l2 * weights
    grad_b = delta.sum(axis=0)
    return float(loss), grad_w, grad_b


def kl_loss_and_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    x_matrix: sp.csr_matrix,
    targets: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean KL(target || softmax(Wx+b)) with analytic gradients (0*log0 = 0)."""
    n = x_matrix.shape[0]
    logits = x_matrix @ weights.T + bias
    logz = logits - logits.max(axis=1, keepdims=True)
    log_probs = logz - np.log(np.exp(logz).sum(axis=1, keepdims=True))
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(targets > 0, targets * (np.log(targets) - log_probs), 0.0)
    loss = float(terms.sum() / n)
    delta = (np.exp(log_probs) - targets) / n
    grad_w = np.asarray((x_matrix.T @ delta).T)
    grad_b = delta.sum(axis=0)
    return loss, grad_w, grad_b


def _training_labels(dataset: Dataset) -> np.ndarray:
    return np.array([dataset.training_label(inst) - 1 for inst in dataset.instances])


def train_ce(dataset: Dataset, cfg: TrainConfig, labels: LabelSpace) -> WeakModel:
    """Mini-batch gradient descent on mean cross-entropy; deterministic per seed."""
    if not dataset.instances:
        raise ValueError("empty dataset")
    space_size = dataset.instances[0].features.size
    x_matrix = to_design_matrix(dataset.instances, space_size)
    y = _training_labels(dataset)
    if y.min() < 0 or y.max() >= labels.k:
        raise ValueError("training labels outside 1..K")
    weights = np.zeros((labels.k, space_size))
    bias = np.zeros(labels.k)
    rng = np.random.default_rng(cfg.seed)
    n = len(dataset.instances)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            _, grad_w, grad_b = ce_loss_and_grad(
                weights, bias, x_matrix[batch], y[batch], cfg.l2
            )
            weights -= cfg.learning_rate * grad_w
            bias -= cfg.learning_rate * grad_b
    return WeakModel(weights=weights, bias=bias)


def sharpen_pseudo_labels(probs: np.ndarray) -> np.ndarray:
    """Square each probability, divide by the batch class mass, renormalize rows.

    With a single row this is the identity; classes with zero total mass
    contribute nothing.
    """
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 2 or probs.shape[0] < 1:
        raise ValueError("expected an N x K matrix with N >= 1")
    if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-6):
        raise ValueError("each row must sum to 1")
    mass = probs.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(mass > 0, probs * probs / mass, 0.0)
    return terms / terms.sum(axis=1, keepdims=True)


def self_train(model: WeakModel, unmatched: Dataset, cfg: TrainConfig) -> WeakModel:
    """Refine the model on unmatched data with sharpened pseudo-labels and KL loss.

    Pseudo-labels are regenerated from the current model at the start of every
    self-training epoch; each epoch is one seeded mini-batch pass. No weight
    decay is applied (the objective is the plain divergence). An empty
    unmatched set returns the model unchanged.
    """
    if not unmatched.instances or cfg.self_train_epochs == 0:
        return model
    x_matrix = to_design_matrix(unmatched.instances, model.n_features)
    weights = model.weights.copy()
    bias = model.bias.copy()
    rng = np.random.default_rng(cfg.seed)
    n = len(unmatched.instances)
    for _ in range(cfg.self_train_epochs):
        probs = _softmax(x_matrix @ weights.T + bias)
        targets = sharpen_pseudo_labels(probs)
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            _, grad_w, grad_b = kl_loss_and_grad(
                weights, bias, x_matrix[batch], targets[batch]
            )
            weights -= cfg.learning_rate * grad_w
            bias -= cfg.learning_rate * grad_b
    return replace(model, weights=weights, bias=bias)


def accuracy(model_predictions: Sequence[int], gold: Sequence[int]) -> float:
    if not gold:
        raise ValueError("empty evaluation set")
    return sum(p == g for p, g in zip(model_predictions, gold)) / len(gold)


def model_to_json(model: WeakModel) -> dict:
    return {
        "weights": model.weights.ravel().tolist(),  # row-major
        "bias": model.bias.tolist(),
        "err_t": model.err_t,
        "alpha_t": model.alpha_t,
        "iteration": model.iteration,
        "feature_space_size": model.n_features,
        "K": model.n_classes,
    }


def model_from_json(row: dict) -> WeakModel:
    k, f = row["K"], row["feature_space_size"]
    return WeakModel(
        weights=np.array(row["weights"]).reshape(k, f),
        bias=np.array(row["bias"]),
        err_t=row["err_t"],
        alpha_t=row["alpha_t"],
        iteration=row["iteration"],
    )
