"""Multi-label evaluation metrics and the Friedman test statistic.

All metric functions take label-by-instance matrices of shape ``(k, n)``.
Ranking-based metrics (ranking loss, coverage, average precision) skip
instances that have no relevant label; ranking loss also skips instances
whose labels are all relevant.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .exceptions import ConfigError, DataError

__all__ = [
    "MetricsReport",
    "METRIC_NAMES",
    "hamming_loss",
    "ranking_loss",
    "coverage",
    "average_precision",
    "macro_f1",
    "micro_f1",
    "evaluate",
    "friedman_chi2",
    "friedman_statistic",
    "rank_methods",
]

METRIC_NAMES = (
    "hamming_loss",
    "ranking_loss",
    "coverage",
    "average_precision",
    "macro_f1",
    "micro_f1",
)


@dataclass(frozen=True)
class MetricsReport:
    hamming_loss: float
    ranking_loss: float
    coverage: float
    average_precision: float
    macro_f1: float
    micro_f1: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)


def _pair(a, b, what=("pred", "truth")):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2:
        raise DataError(f"{what[0]} {a.shape} and {what[1]} {b.shape} must be equal 2-D shapes")
    return a, b


def hamming_loss(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    return float(np.mean(pred != truth))


def _label_positions(scores):
    """0-based rank of every label per instance, highest score first.

    Ties are broken by ascending label index. Returns ``(k, n)``.
    """
    k, n = scores.shape
    pos = np.empty((k, n), dtype=int)
    idx = np.arange(k)
    for i in range(n):
        order = np.lexsort((idx, -scores[:, i]))
        pos[order, i] = idx
    return pos


def ranking_loss(scores, truth) -> float:
    """Mean fraction of mis-ordered (relevant, irrelevant) label pairs.

    A tie between a relevant and an irrelevant score counts as half a
    mis-ordering.
    """
    scores, truth = _pair(scores, truth, ("scores", "truth"))
    scores = scores.astype(float)
    truth = truth.astype(bool)
    losses = []
    for s, t in zip(scores.T, truth.T):
        rel, irr = s[t], s[~t]
        if rel.size == 0 or irr.size == 0:
            continue
        diff = rel[:, None] - irr[None, :]
        bad = np.count_nonzero(diff < 0) + 0.5 * np.count_nonzero(diff == 0)
        losses.append(bad / diff.size)
    if not losses:
        raise DataError("ranking loss undefined: no instance has both relevant and irrelevant labels")
    return float(np.mean(losses))


def coverage(scores, truth) -> float:
    """Mean 0-based rank of the lowest-ranked relevant label."""
    scores, truth = _pair(scores, truth, ("scores", "truth"))
    truth = truth.astype(bool)
    keep = truth.any(axis=0)
    if not keep.any():
        raise DataError("coverage undefined: no instance has a relevant label")
    pos = _label_positions(scores.astype(float))
    worst = np.where(truth, pos, -1).max(axis=0)
    return float(np.mean(worst[keep]))


def average_precision(scores, truth) -> float:
    scores, truth = _pair(scores, truth, ("scores", "truth"))
    truth = truth.astype(bool)
    if not truth.any():
        raise DataError("average precision undefined: no instance has a relevant label")
    ranks = _label_positions(scores.astype(float)) + 1
    vals = []
    for r, t in zip(ranks.T, truth.T):
        rel = r[t]
        if rel.size == 0:
            continue
        above = (rel[None, :] <= rel[:, None]).sum(axis=1)
        vals.append(np.mean(above / rel))
    return float(np.mean(vals))


def _confusion(pred, truth):
    pred, truth = _pair(pred, truth)
    p = pred.astype(bool)
    t = truth.astype(bool)
    tp = np.sum(p & t, axis=1)
    fp = np.sum(p & ~t, axis=1)
    fn = np.sum(~p & t, axis=1)
    return tp, fp, fn


def _f1(tp, fp, fn):
    den = 2 * tp + fp + fn
    return np.where(den > 0, 2 * tp / np.where(den > 0, den, 1), 0.0)


def macro_f1(pred, truth) -> float:
    """Mean per-label F1; a label with no positives predicted or present scores 0."""
    tp, fp, fn = _confusion(pred, truth)
    return float(np.mean(_f1(tp, fp, fn)))


def micro_f1(pred, truth) -> float:
    tp, fp, fn = _confusion(pred, truth)
    return float(_f1(tp.sum(), fp.sum(), fn.sum()))


def evaluate(pred, scores, truth) -> MetricsReport:
    return MetricsReport(
        hamming_loss=hamming_loss(pred, truth),
        ranking_loss=ranking_loss(scores, truth),
        coverage=coverage(scores, truth),
        average_precision=average_precision(scores, truth),
        macro_f1=macro_f1(pred, truth),
        micro_f1=micro_f1(pred, truth),
    )


# ----------------------------------------------------------------------------
# Friedman test


def _check_ranks(ranks):
    R = np.asarray(ranks, dtype=float)
    if R.ndim != 2:
        raise DataError("rank table must be 2-D (methods x datasets)")
    K, N = R.shape
    if K < 2 or N < 2:
        raise ConfigError(f"Friedman test needs >= 2 methods and >= 2 datasets, got {K} x {N}")
    return R, K, N


def friedman_chi2(ranks) -> float:
    """Friedman chi-square from a ``(methods, datasets)`` table of ranks."""
    R, K, N = _check_ranks(ranks)
    avg = R.mean(axis=1)
    return float(12.0 * N / (K * (K + 1)) * (np.sum(avg**2) - K * (K + 1) ** 2 / 4.0))


def friedman_statistic(ranks) -> float:
    """Iman-Davenport F statistic, F-distributed with ``(K-1, (K-1)(N-1))`` dof.

    Returns ``inf`` when the rankings agree perfectly across datasets.
    """
    R, K, N = _check_ranks(ranks)
    chi2 = friedman_chi2(R)
    den = N * (K - 1) - chi2
    if den <= 0:
        return float("inf")
    return float((N - 1) * chi2 / den)


def rank_methods(values, higher_is_better: bool = True) -> np.ndarray:
    """Rank methods (rows) within each dataset (column); rank 1 is best, ties averaged."""
    V = np.asarray(values, dtype=float)
    if V.ndim != 2:
        raise DataError("values must be 2-D (methods x datasets)")
    sign = -1.0 if higher_is_better else 1.0
    return np.apply_along_axis(rankdata, 0, sign * V)
