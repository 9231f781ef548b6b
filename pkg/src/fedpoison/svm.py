"""One-vs-rest linear SVM: hinge loss, full-batch subgradient training, scoring.

A model is a flat float64 vector of ``n_classes`` blocks, each holding
``n_features`` weights followed by one bias. The multi-class extension runs
``n_classes`` independent binary hinge problems over the shared vector; the
reported loss is their mean. Each block's objective is

    0.5 * ||w_c||^2  +  mean_i max(0, 1 - y_ic * (b_c + w_c . x_i))

with y_ic = +1 when sample i belongs to class c and -1 otherwise.
"""

from __future__ import annotations

import numpy as np

from .datasets import DataShard, Dataset
from .errors import ContractError, NumericError


def model_dim(n_classes: int, n_features: int) -> int:
    return n_classes * (n_features + 1)


def zero_model(n_classes: int, n_features: int) -> np.ndarray:
    return np.zeros(model_dim(n_classes, n_features))


def model_blocks(model: np.ndarray, n_classes: int) -> tuple[np.ndarray, np.ndarray]:
    """Split a flat model into weights (C, d) and biases (C,). Views, no copy."""
    model = np.asarray(model)
    if model.ndim != 1 or model.size % n_classes != 0:
        raise ContractError(
            f"model of size {model.size} does not hold {n_classes} equal blocks"
        )
    blocks = model.reshape(n_classes, -1)
    return blocks[:, :-1], blocks[:, -1]


def flat_model(weights: np.ndarray, biases: np.ndarray) -> np.ndarray:
    """Inverse of model_blocks."""
    return np.hstack([weights, biases[:, None]]).ravel()


def decision_scores(model: np.ndarray, features: np.ndarray, n_classes: int) -> np.ndarray:
    """Per-class scores b_c + w_c . x for every sample; shape (n, C)."""
    weights, biases = model_blocks(model, n_classes)
    if features.shape[1] != weights.shape[1]:
        raise ContractError(
            f"model expects {weights.shape[1]} features, data has {features.shape[1]}"
        )
    return features @ weights.T + biases


def _signed_targets(labels: np.ndarray, n_classes: int) -> np.ndarray:
    return np.where(labels[:, None] == np.arange(n_classes)[None, :], 1.0, -1.0)


def svm_loss(model: np.ndarray, shard: DataShard) -> float:
    """Mean over classes of the one-vs-rest regularized hinge losses."""
    features, labels = shard.features, shard.labels
    scores = decision_scores(model, features, shard.n_classes)
    margins = _signed_targets(labels, shard.n_classes) * scores
    hinge = np.maximum(0.0, 1.0 - margins).mean(axis=0)
    weights, _ = model_blocks(model, shard.n_classes)
    reg = 0.5 * (weights**2).sum(axis=1)
    return float((reg + hinge).mean())


def local_train(
    client,
    global_model: np.ndarray,
    t_local: int,
    eta: float,
    mu: float = 1.0,
) -> np.ndarray:
    """Run ``t_local`` full-batch subgradient steps from the broadcast model.

    ``client`` is a ClientState-like object carrying a ``shard`` attribute, or
    a bare DataShard. Each class block descends its own hinge objective with
    step size ``eta``; ``mu`` scales the 0.5*||w||^2 regularizer. The
    subgradient of the hinge at margin exactly 1 is taken as 0. Deterministic.
    """
    shard: DataShard = getattr(client, "shard", client)
    if t_local < 0:
        raise ContractError(f"t_local must be >= 0, got {t_local}")
    if eta < 0:
        raise ContractError(f"eta must be >= 0, got {eta}")
    features, labels = shard.features, shard.labels
    n_classes = shard.n_classes
    weights, biases = model_blocks(np.array(global_model, dtype=np.float64), n_classes)
    weights = weights.copy()
    biases = biases.copy()
    targets = _signed_targets(labels, n_classes)
    n = features.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(t_local):
            margins = targets * (features @ weights.T + biases)
            active = targets * (margins < 1.0)  # (n, C): y_ic where hinge is active
            grad_w = mu * weights - (active.T @ features) / n
            grad_b = -active.sum(axis=0) / n
            if not (np.all(np.isfinite(grad_w)) and np.all(np.isfinite(grad_b))):
                raise NumericError(f"non-finite gradient for client {shard.owner_id}")
            weights -= eta * grad_w
            biases -= eta * grad_b
    return flat_model(weights, biases)


def evaluate_accuracy(model: np.ndarray, dataset: Dataset) -> float:
    """Fraction of samples whose argmax class score matches the label.

    Ties break toward the lowest class index.
    """
    if dataset.n_samples == 0:
        raise ContractError("cannot evaluate accuracy on an empty dataset")
    scores = decision_scores(model, dataset.features, dataset.n_classes)
    predictions = np.argmax(scores, axis=1)
    return float(np.mean(predictions == dataset.labels))
