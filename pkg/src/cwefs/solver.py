"""Channel-weighted shared-latent NMF feature selection.

Objective minimised over non-negative ``Q[v]`` (d_v x k), ``U`` (n x k),
``M`` (k x k) and simplex weights ``alpha``::

    sum_v alpha_v**gamma * ( ||X_v - Q_v U^T||_F^2 + lam ||Y - M U^T||_F^2
                             + eta Tr(U^T L_Y U) + beta Tr(U^T L_v U)
                             + delta ||Q_v||_{2,1} )

Each sweep applies multiplicative updates to Q, U and M followed by the
closed-form weight update, in that order. Features are ranked by the l2
norm of their row in ``Q[v]``.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .exceptions import ConfigError, DataError, NumericalError

__all__ = [
    "HyperParams",
    "SolverState",
    "FeatureRanking",
    "init_state",
    "objective",
    "channel_costs",
    "update_Q",
    "update_U",
    "update_M",
    "update_alpha",
    "alpha_from_costs",
    "solve",
    "rank_features",
    "select_top",
    "write_ranking_csv",
    "read_ranking_csv",
    "write_trace_csv",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class HyperParams:
    """Trade-off weights and stopping rules.

    ``lam`` weighs label reconstruction, ``beta`` the per-channel feature
    graphs, ``eta`` the label graph, ``delta`` the l2,1 penalty and
    ``gamma`` (> 1) is the channel-weight exponent. ``adaptive_weights``
    set to False freezes ``alpha`` at ``1/ch``.
    """

    lam: float = 0.1
    beta: float = 0.1
    eta: float = 0.1
    gamma: float = 2.0
    delta: float = 0.1
    epsilon: float = 1e-12
    max_iters: int = 300
    rel_tol: float = 1e-6
    latent_dim: int | None = None
    adaptive_weights: bool = True

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError("lam must be > 0")
        for name in ("beta", "eta", "delta"):
            if not getattr(self, name) >= 0:
                raise ConfigError(f"{name} must be >= 0")
        if not self.gamma > 1:
            raise ConfigError("gamma must be > 1")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be > 0")
        if self.max_iters < 0:
            raise ConfigError("max_iters must be >= 0")
        if self.rel_tol < 0:
            raise ConfigError("rel_tol must be >= 0")
        if self.latent_dim is not None and self.latent_dim < 1:
            raise ConfigError("latent_dim must be >= 1")


@dataclass
class SolverState:
    Q: list
    U: np.ndarray
    M: np.ndarray
    alpha: np.ndarray
    objective_trace: list = field(default_factory=list)

    def copy(self) -> "SolverState":
        return SolverState(
            [q.copy() for q in self.Q], self.U.copy(), self.M.copy(),
            self.alpha.copy(), list(self.objective_trace),
        )


@dataclass(frozen=True)
class FeatureRanking:
    """Global ordering of ``(channel, feature)`` pairs, best first."""

    channel: np.ndarray
    feature: np.ndarray
    score: np.ndarray

    @property
    def entries(self) -> list:
        return [
            (int(c), int(f), float(s))
            for c, f, s in zip(self.channel, self.feature, self.score)
        ]

    @property
    def pairs(self) -> list:
        return [(int(c), int(f)) for c, f in zip(self.channel, self.feature)]

    def __len__(self):
        return len(self.score)

    @classmethod
    def from_scores(cls, scores) -> "FeatureRanking":
        """Sort per-channel score vectors descending; ties by (channel, feature)."""
        chan = np.concatenate([np.full(len(s), v) for v, s in enumerate(scores)])
        feat = np.concatenate([np.arange(len(s)) for s in scores])
        sc = np.concatenate([np.asarray(s, dtype=float) for s in scores])
        order = np.lexsort((feat, chan, -sc))
        return cls(chan[order], feat[order], sc[order])


# ----------------------------------------------------------------------------
# helpers


def _unpack(data):
    """Return (list of X_v, Y) from a dataset or an ``(Xs, Y)`` tuple."""
    if isinstance(data, tuple):
        Xs, Y = data
        return [np.asarray(x, dtype=float) for x in Xs], np.asarray(Y, dtype=float)
    if data.labels_binary is None:
        raise DataError("labels must be binarized before solving")
    return list(data.X), data.labels_binary.astype(float)


def _laplacians(graphs):
    return list(graphs.channels), graphs.labels


def _l21(Q):
    return float(np.sqrt((Q * Q).sum(axis=1)).sum())


def _trace_quad(L, U):
    return float(np.sum(U * (L @ U)))


def _check_shapes(state, Xs, Y, graphs=None):
    n, k = state.U.shape
    if len(Xs) != len(state.Q):
        raise DataError(f"{len(Xs)} channels but {len(state.Q)} Q matrices")
    for v, (x, q) in enumerate(zip(Xs, state.Q)):
        if x.shape != (q.shape[0], n) or q.shape[1] != k:
            raise DataError(f"channel {v}: X {x.shape}, Q {q.shape}, U {state.U.shape}")
    if Y.shape[1] != n or state.M.shape != (Y.shape[0], k):
        raise DataError(f"Y {Y.shape}, M {state.M.shape}, U {state.U.shape}")
    if len(state.alpha) != len(Xs):
        raise DataError("alpha length differs from channel count")
    if graphs is not None:
        chans, lab = _laplacians(graphs)
        if len(chans) != len(Xs):
            raise DataError("one channel Laplacian per channel required")
        for lap in chans + [lab]:
            if lap.L.shape != (n, n):
                raise DataError(f"Laplacian shape {lap.L.shape}, expected {(n, n)}")


# ----------------------------------------------------------------------------
# objective


def channel_costs(state: SolverState, data, graphs, hp: HyperParams) -> np.ndarray:
    """Unweighted per-channel bracket term ``e_v`` of the objective.

    The label terms are identical for every channel and are included in
    each ``e_v``.
    """
    Xs, Y = _unpack(data)
    _check_shapes(state, Xs, Y, graphs)
    chans, lab = _laplacians(graphs)
    U = state.U
    shared = hp.lam * float(np.sum((Y - state.M @ U.T) ** 2))
    shared += hp.eta * _trace_quad(lab.L, U)
    costs = []
    for x, q, lap in zip(Xs, state.Q, chans):
        e = float(np.sum((x - q @ U.T) ** 2)) + shared
        e += hp.beta * _trace_quad(lap.L, U) + hp.delta * _l21(q)
        costs.append(e)
    return np.array(costs)


def objective(state: SolverState, data, graphs, hp: HyperParams) -> float:
    e = channel_costs(state, data, graphs, hp)
    return float(np.sum(np.asarray(state.alpha) ** hp.gamma * e))


# ----------------------------------------------------------------------------
# updates


def update_Q(state: SolverState, data, hp: HyperParams) -> list:
    """Multiplicative update of every ``Q[v]`` with U fixed.

    ``Q <- Q * (X U) / (Q U^T U + delta D Q + eps)`` where ``D`` is diagonal
    with ``D_ii = 1 / (2 sqrt(||Q_i||^2 + eps))``.
    """
    Xs, _ = _unpack(data)
    U, eps = state.U, hp.epsilon
    UtU = U.T @ U
    out = []
    for x, q in zip(Xs, state.Q):
        d = 1.0 / (2.0 * np.sqrt((q * q).sum(axis=1, keepdims=True) + eps))
        den = q @ UtU + hp.delta * d * q + eps
        out.append(q * (x @ U) / den)
    return out


def update_U(state: SolverState, data, graphs, hp: HyperParams) -> np.ndarray:
    """Multiplicative update of the shared latent matrix.

    Each Laplacian ``L = G - S`` is split so that the affinity part enters
    the numerator and the degree part the denominator, which keeps every
    factor non-negative.
    """
    Xs, Y = _unpack(data)
    chans, lab = _laplacians(graphs)
    U, M, eps = state.U, state.M, hp.epsilon
    w = np.asarray(state.alpha, dtype=float) ** hp.gamma
    wsum = float(w.sum())

    label_num = hp.lam * (Y.T @ M) + hp.eta * (lab.S @ U)
    label_den = hp.lam * (U @ (M.T @ M)) + hp.eta * (lab.degree[:, None] * U)
    num = wsum * label_num
    den = wsum * label_den
    for wv, x, q, lap in zip(w, Xs, state.Q, chans):
        num = num + wv * (x.T @ q + hp.beta * (lap.S @ U))
        den = den + wv * (U @ (q.T @ q) + hp.beta * (lap.degree[:, None] * U))
    return U * num / (den + eps)


def update_M(state: SolverState, data, hp: HyperParams) -> np.ndarray:
    """``M <- M * (Y U) / (M U^T U + eps)``; channel weights cancel."""
    _, Y = _unpack(data)
    U = state.U
    return state.M * (Y @ U) / (state.M @ (U.T @ U) + hp.epsilon)


def alpha_from_costs(costs, gamma: float, epsilon: float = 1e-12) -> np.ndarray:
    """Closed-form simplex minimiser of ``sum_v alpha_v**gamma * e_v``.

    ``alpha_v`` is proportional to ``e_v ** (1 / (1 - gamma))``, evaluated in
    log space. Costs are floored at ``epsilon``; when every cost is below
    the floor uniform weights are returned with a warning.
    """
    e = np.asarray(costs, dtype=float)
    if e.size == 1:
        return np.ones(1)
    if np.all(e < epsilon):
        warnings.warn("all channel costs below floor; using uniform weights",
                      RuntimeWarning, stacklevel=2)
        return np.full(e.size, 1.0 / e.size)
    logs = np.log(np.maximum(e, epsilon)) / (1.0 - gamma)
    alpha = np.exp(logs - logsumexp(logs))
    return alpha / alpha.sum()


def update_alpha(state: SolverState, data, graphs, hp: HyperParams) -> np.ndarray:
    if not hp.adaptive_weights:
        ch = len(state.Q)
        return np.full(ch, 1.0 / ch)
    e = channel_costs(state, data, graphs, hp)
    return alpha_from_costs(e, hp.gamma, hp.epsilon)


# ----------------------------------------------------------------------------
# driver


def init_state(data, hp: HyperParams, seed: int = 0) -> SolverState:
    """Random strictly positive factors in (0.01, 1], uniform ``alpha``.

    Draw order: ``Q[0] .. Q[ch-1]``, then ``U``, then ``M``.
    """
    Xs, Y = _unpack(data)
    n = Y.shape[1]
    k_lab = Y.shape[0]
    r = hp.latent_dim or k_lab
    if r != k_lab:
        raise ConfigError("M is k x k, so latent_dim must equal the label count")
    rng = np.random.default_rng(seed)

    def draw(shape):
        return 1.0 - rng.uniform(0.0, 0.99, size=shape)

    Q = [draw((x.shape[0], r)) for x in Xs]
    U = draw((n, r))
    M = draw((k_lab, r))
    ch = len(Xs)
    return SolverState(Q, U, M, np.full(ch, 1.0 / ch))


def solve(data, graphs, hp: HyperParams = HyperParams(), seed: int = 0,
          init: SolverState | None = None) -> SolverState:
    """Run alternating updates until the relative objective change drops
    below ``hp.rel_tol`` or ``hp.max_iters`` sweeps have run.

    ``objective_trace[0]`` is the objective at initialisation and one value
    is appended per sweep.
    """
    Xs, Y = _unpack(data)
    if any(np.any(x < 0) for x in Xs):
        raise DataError("feature matrices must be non-negative; normalize first")
    state = init.copy() if init is not None else init_state((Xs, Y), hp, seed)
    state.objective_trace = []
    packed = (Xs, Y)
    _check_shapes(state, Xs, Y, graphs)

    prev = objective(state, packed, graphs, hp)
    if not math.isfinite(prev):
        raise NumericalError("non-finite objective at initialisation")
    state.objective_trace.append(prev)

    for sweep in range(1, hp.max_iters + 1):
        state.Q = update_Q(state, packed, hp)
        state.U = update_U(state, packed, graphs, hp)
        state.M = update_M(state, packed, hp)
        state.alpha = update_alpha(state, packed, graphs, hp)
        cur = objective(state, packed, graphs, hp)
        if not math.isfinite(cur):
            raise NumericalError(f"non-finite objective at sweep {sweep}")
        state.objective_trace.append(cur)
        if abs(cur - prev) / max(prev, hp.epsilon) < hp.rel_tol:
            log.debug("converged after %d sweeps, objective %.6g", sweep, cur)
            break
        prev = cur
    return state


# ----------------------------------------------------------------------------
# ranking


def rank_features(state: SolverState, alpha_weighted: bool = False) -> FeatureRanking:
    """Rank every feature row by the l2 norm of its ``Q[v]`` row.

    ``alpha_weighted`` multiplies each channel's norms by its weight.
    """
    scores = [np.sqrt((q * q).sum(axis=1)) for q in state.Q]
    if alpha_weighted:
        scores = [s * a for s, a in zip(scores, state.alpha)]
    return FeatureRanking.from_scores(scores)


def select_top(ranking: FeatureRanking, ratio: float) -> list:
    """First ``ceil(ratio * total)`` ``(channel, feature)`` pairs of the ranking."""
    if not 0 < ratio <= 1:
        raise ConfigError(f"ratio must lie in (0, 1], got {ratio}")
    total = len(ranking)
    count = max(1, math.ceil(ratio * total - 1e-9))
    return ranking.pairs[:count]


def write_ranking_csv(ranking: FeatureRanking, path) -> None:
    with open(path, "w") as fh:
        fh.write("global_rank,channel,feature_index,score\n")
        for r, (c, f, s) in enumerate(ranking.entries, start=1):
            fh.write(f"{r},{c},{f},{format(s, '.17g')}\n")


def read_ranking_csv(path) -> FeatureRanking:
    rows = Path(path).read_text().splitlines()[1:]
    parsed = [line.split(",") for line in rows if line.strip()]
    parsed.sort(key=lambda p: int(p[0]))
    return FeatureRanking(
        np.array([int(p[1]) for p in parsed]),
        np.array([int(p[2]) for p in parsed]),
        np.array([float(p[3]) for p in parsed]),
    )


def write_trace_csv(state: SolverState, path) -> None:
    with open(path, "w") as fh:
        fh.write("sweep,objective\n")
        for t, val in enumerate(state.objective_trace):
            fh.write(f"{t},{format(val, '.17g')}\n")
