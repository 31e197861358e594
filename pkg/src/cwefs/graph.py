"""Heat-kernel q-nearest-neighbour affinity graphs and their Laplacians."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import ConfigError, DataError

__all__ = [
    "AffinityGraph",
    "Laplacian",
    "GraphSet",
    "build_affinity",
    "build_laplacian",
    "build_graphs",
    "neighbor_sets",
    "dump_graph",
]


@dataclass(frozen=True)
class AffinityGraph:
    S: np.ndarray
    q: int
    sigma: float


@dataclass(frozen=True)
class Laplacian:
    """``L = G - S`` with ``G = diag(degree)``.

    The affinity matrix is kept so that callers can split ``L`` into its
    non-negative parts ``G`` and ``S``.
    """

    L: np.ndarray
    degree: np.ndarray
    S: np.ndarray


@dataclass(frozen=True)
class GraphSet:
    """One Laplacian per channel plus the label-space Laplacian."""

    channels: tuple
    labels: Laplacian


def neighbor_sets(points, q: int) -> np.ndarray:
    """Boolean ``(n, n)`` matrix; ``nbr[j, i]`` is True if ``i`` is among the
    ``q`` nearest neighbours of ``j``.

    Self is excluded. Distance ties at the cut-off go to the lower index.
    """
    pts = np.asarray(points, dtype=float).T
    d2 = cdist(pts, pts, "sqeuclidean")
    return _knn_mask(d2, q)


def _knn_mask(d2, q):
    n = d2.shape[0]
    d2 = d2.copy()
    np.fill_diagonal(d2, np.inf)
    # stable sort keeps ascending index among equal distances
    order = np.argsort(d2, axis=1, kind="stable")[:, :q]
    mask = np.zeros((n, n), dtype=bool)
    mask[np.repeat(np.arange(n), q), order.ravel()] = True
    return mask


def build_affinity(points, q: int = 5, sigma: float = 1.0) -> AffinityGraph:
    """Heat-kernel affinity over the columns of ``points``.

    ``S[i, j] = exp(-||x_i - x_j||^2 / sigma^2)`` when ``x_i`` is one of the
    ``q`` nearest neighbours of ``x_j`` or vice versa, otherwise 0. The
    diagonal is 0.

    Parameters
    ----------
    points : array_like, shape (d, n)
        Instances as columns.
    q : int
        Neighbour count, ``1 <= q <= n - 1``.
    sigma : float
        Kernel width.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise DataError("points must be a 2-D (d, n) matrix")
    n = pts.shape[1]
    if n < 2:
        raise DataError("need at least two points")
    if not 1 <= q <= n - 1:
        raise ConfigError(f"q must lie in [1, {n - 1}], got {q}")
    if not sigma > 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    if not np.all(np.isfinite(pts)):
        raise DataError("non-finite point coordinate")

    d2 = cdist(pts.T, pts.T, "sqeuclidean")
    mask = _knn_mask(d2, q)
    mask |= mask.T
    S = np.where(mask, np.exp(-d2 / sigma**2), 0.0)
    np.fill_diagonal(S, 0.0)
    # cdist is symmetric up to rounding; make it exact
    S = np.maximum(S, S.T)
    return AffinityGraph(S, q, float(sigma))


def build_laplacian(graph: AffinityGraph) -> Laplacian:
    S = np.asarray(graph.S, dtype=float)
    degree = S.sum(axis=1)
    return Laplacian(np.diag(degree) - S, degree, S)


def build_graphs(dataset, q: int = 5, sigma: float = 1.0, label_q=None) -> GraphSet:
    """Build feature-space graphs for every channel and the label graph.

    The label graph uses ``dataset.labels_binary`` columns as points.
    """
    if dataset.labels_binary is None:
        raise DataError("labels must be binarized before building the label graph")
    chans = tuple(build_laplacian(build_affinity(x, q, sigma)) for x in dataset.X)
    lq = q if label_q is None else label_q
    lab = build_laplacian(build_affinity(dataset.labels_binary, lq, sigma))
    return GraphSet(chans, lab)


def dump_graph(laplacian: Laplacian, out_dir, stem: str) -> list:
    """Write ``S`` and ``L`` as CSV files ``<stem>_S.csv`` and ``<stem>_L.csv``."""
    from .dataset import write_matrix_csv

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{stem}_S.csv", out / f"{stem}_L.csv"]
    write_matrix_csv(paths[0], laplacian.S)
    write_matrix_csv(paths[1], laplacian.L)
    return paths
