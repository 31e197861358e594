"""ML-KNN multi-label classifier.

Matrices follow the package convention: features ``(d, n)`` and labels
``(k, n)`` with instances as columns.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import ConfigError, DataError

__all__ = ["MlknnModel", "fit", "predict", "nearest_neighbors"]


@dataclass(frozen=True)
class MlknnModel:
    k_neighbors: int
    smoothing: float
    priors: np.ndarray          # (k,) P(H_j = 1)
    cond_pos: np.ndarray        # (k, K+1) P(C_j = c | H_j = 1)
    cond_neg: np.ndarray        # (k, K+1) P(C_j = c | H_j = 0)
    train_features: np.ndarray
    train_labels: np.ndarray


def nearest_neighbors(query, reference, k: int, exclude_self: bool = False) -> np.ndarray:
    """Indices ``(n_query, k)`` of the ``k`` nearest reference columns.

    Euclidean distance; ties go to the lower reference index. With
    ``exclude_self`` the query set must be the reference set and each
    instance is removed from its own neighbour list.
    """
    d2 = cdist(np.asarray(query, float).T, np.asarray(reference, float).T, "sqeuclidean")
    if exclude_self:
        np.fill_diagonal(d2, np.inf)
    return np.argsort(d2, axis=1, kind="stable")[:, :k]


def fit(train_features, train_labels, k_neighbors: int = 10,
        smoothing: float = 1.0) -> MlknnModel:
    """Estimate smoothed priors and neighbour-count likelihoods."""
    X = np.asarray(train_features, dtype=float)
    Y = np.asarray(train_labels)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise DataError(f"features {X.shape} and labels {Y.shape} disagree on n")
    if not np.all((Y == 0) | (Y == 1)):
        raise DataError("labels must be binary")
    if k_neighbors < 1:
        raise ConfigError("k_neighbors must be >= 1")
    if smoothing <= 0:
        raise ConfigError("smoothing must be > 0")
    Y = Y.astype(np.int64)
    k_lab, n = Y.shape
    if n <= k_neighbors:
        raise ConfigError(f"need more than {k_neighbors} training instances, got {n}")
    s, K = float(smoothing), k_neighbors

    priors = (s + Y.sum(axis=1)) / (2 * s + n)

    nbrs = nearest_neighbors(X, X, K, exclude_self=True)
    counts = Y[:, nbrs].sum(axis=2)                      # (k, n)
    pos = np.zeros((k_lab, K + 1))
    neg = np.zeros((k_lab, K + 1))
    for j in range(k_lab):
        pos[j] = np.bincount(counts[j, Y[j] == 1], minlength=K + 1)
        neg[j] = np.bincount(counts[j, Y[j] == 0], minlength=K + 1)
    cond_pos = (s + pos) / (s * (K + 1) + pos.sum(axis=1, keepdims=True))
    cond_neg = (s + neg) / (s * (K + 1) + neg.sum(axis=1, keepdims=True))
    return MlknnModel(K, s, priors, cond_pos, cond_neg, X.copy(), Y.copy())


def predict(model: MlknnModel, test_features):
    """Return ``(predictions, scores)``, both ``(k, n_test)``.

    ``scores`` is the posterior ``P(H_j = 1 | C_j = c)``; a label is
    predicted whenever its positive posterior is at least the negative one.
    """
    T = np.asarray(test_features, dtype=float)
    if T.ndim != 2 or T.shape[0] != model.train_features.shape[0]:
        raise DataError(
            f"test features have {T.shape[0] if T.ndim == 2 else '?'} rows, "
            f"model expects {model.train_features.shape[0]}"
        )
    nbrs = nearest_neighbors(T, model.train_features, model.k_neighbors)
    counts = model.train_labels[:, nbrs].sum(axis=2)     # (k, n_test)
    rows = np.arange(counts.shape[0])[:, None]
    p1 = model.priors[:, None] * model.cond_pos[rows, counts]
    p0 = (1 - model.priors)[:, None] * model.cond_neg[rows, counts]
    scores = p1 / (p1 + p0)
    return (p1 >= p0).astype(np.int8), scores
