"""Repeated-trial evaluation harness.

Each trial draws a seeded train/test split, fits the selector on the
training portion only, and for every feature ratio trains ML-KNN on the
selected training features and scores the held-out instances.

Config files are flat ``key = value`` text. Recognised keys::

    manifest              path to a dataset manifest (relative to the config file)
    synthetic.<field>     ch, d_per_channel, n, k, relevant_per_channel,
                          noise_sigma, seed, n_subjects
    threshold             label binarization threshold (default 5)
    strict_threshold      true: score > threshold is high; false: >=
    split                 subject | instance
    q, sigma              graph neighbour count and kernel width
    ratios                comma list of feature ratios in (0, 1]
    trials, train_fraction, seed
    baselines             comma list drawn from: random, variance
    k_neighbors, smoothing
    hp.<field>            lambda, beta, eta, gamma, delta, epsilon,
                          max_iters, rel_tol, adaptive_weights

Exactly one of ``manifest`` and ``synthetic.*`` must be given.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import mlknn
from .dataset import (
    MultiChannelDataset,
    binarize_labels,
    generate_synthetic,
    load_dataset,
    normalize_features,
    split_instancewise,
    split_subjectwise,
)
from .exceptions import ConfigError, CwefsError
from .graph import build_graphs
from .metrics import METRIC_NAMES, MetricsReport, evaluate
from .solver import FeatureRanking, HyperParams, rank_features, select_top, solve

__all__ = [
    "SyntheticSpec",
    "ExperimentConfig",
    "TrialRecord",
    "SweepReport",
    "TrialError",
    "parse_config",
    "load_config",
    "prepare_dataset",
    "baseline_random",
    "baseline_variance",
    "run_experiment",
    "evaluate_ranking",
    "emit_report",
    "REPORT_FILES",
]

log = logging.getLogger(__name__)

DEFAULT_RATIOS = tuple(round(0.05 * i, 2) for i in range(1, 11))
BASELINES = ("random", "variance")
REPORT_FILES = ("aggregate.csv", "trials.csv", "summary.json")


class TrialError(CwefsError):
    """Wraps a failure with the trial and pipeline stage it occurred in."""

    def __init__(self, trial, stage, cause):
        self.trial = trial
        self.stage = stage
        super().__init__(f"trial {trial}, stage {stage}: {cause}")


@dataclass(frozen=True)
class SyntheticSpec:
    ch: int = 3
    d_per_channel: tuple = (40,)
    n: int = 120
    k: int = 3
    relevant_per_channel: int = 8
    noise_sigma: float = 0.05
    seed: int = 0
    n_subjects: int = 10

    def generate(self):
        d = list(self.d_per_channel)
        if len(d) == 1:
            d = d * self.ch
        return generate_synthetic(self.ch, d, self.n, self.k, self.relevant_per_channel,
                                  self.noise_sigma, self.seed, self.n_subjects)


@dataclass(frozen=True)
class ExperimentConfig:
    manifest: Optional[str] = None
    synthetic: Optional[SyntheticSpec] = None
    hyperparams: HyperParams = HyperParams()
    q: int = 5
    sigma: float = 1.0
    feature_ratios: tuple = DEFAULT_RATIOS
    trials: int = 50
    train_fraction: float = 0.8
    seed: int = 0
    baselines: tuple = BASELINES
    threshold: float = 5.0
    strict_threshold: bool = True
    split: str = "subject"
    k_neighbors: int = 10
    smoothing: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "feature_ratios", tuple(float(r) for r in self.feature_ratios))
        object.__setattr__(self, "baselines", tuple(self.baselines))
        if (self.manifest is None) == (self.synthetic is None):
            raise ConfigError("give exactly one of a manifest or a synthetic spec")
        r = self.feature_ratios
        if not r:
            raise ConfigError("feature_ratios is empty")
        if any(not 0 < x <= 1 for x in r):
            raise ConfigError("feature ratios must lie in (0, 1]")
        if any(b <= a for a, b in zip(r, r[1:])):
            raise ConfigError("feature ratios must be strictly increasing")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        unknown = set(self.baselines) - set(BASELINES)
        if unknown:
            raise ConfigError(f"unknown baselines: {sorted(unknown)}")
        if self.split not in ("subject", "instance"):
            raise ConfigError("split must be 'subject' or 'instance'")
        if self.q < 1 or not self.sigma > 0:
            raise ConfigError("need q >= 1 and sigma > 0")

    @property
    def methods(self) -> tuple:
        return ("cwefs",) + self.baselines


# ----------------------------------------------------------------------------
# config parsing


def _bool(v):
    v = v.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _floats(v):
    return tuple(float(x) for x in v.split(",") if x.strip())


def _names(v):
    return tuple(x.strip() for x in v.split(",") if x.strip())


_TOP = {
    "threshold": float, "strict_threshold": _bool, "split": str.strip,
    "q": int, "sigma": float, "ratios": _floats, "trials": int,
    "train_fraction": float, "seed": int, "baselines": _names,
    "k_neighbors": int, "smoothing": float,
}
_HP = {
    "lambda": ("lam", float), "beta": ("beta", float), "eta": ("eta", float),
    "gamma": ("gamma", float), "delta": ("delta", float),
    "epsilon": ("epsilon", float), "max_iters": ("max_iters", int),
    "rel_tol": ("rel_tol", float), "adaptive_weights": ("adaptive_weights", _bool),
}
_SYN = {
    "ch": int, "d_per_channel": lambda v: tuple(int(x) for x in v.split(",")),
    "n": int, "k": int, "relevant_per_channel": int, "noise_sigma": float,
    "seed": int, "n_subjects": int,
}


def parse_config(text: str, base_dir=None, **overrides) -> ExperimentConfig:
    """Parse flat ``key = value`` text into an :class:`ExperimentConfig`.

    ``overrides`` (e.g. ``seed``, ``trials``, ``feature_ratios``) replace
    parsed values when not None.
    """
    top, hp, syn = {}, {}, {}
    manifest = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        try:
            if key == "manifest":
                p = Path(value)
                if base_dir is not None and not p.is_absolute():
                    p = Path(base_dir) / p
                manifest = str(p)
            elif key.startswith("hp."):
                name, conv = _HP[key[3:]]
                hp[name] = conv(value)
            elif key.startswith("synthetic."):
                syn[key[10:]] = _SYN[key[10:]](value)
            else:
                top[key] = _TOP[key](value)
        except KeyError:
            raise ConfigError(f"line {lineno}: unknown key {key!r}") from None
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None

    kwargs = dict(top)
    if "ratios" in kwargs:
        kwargs["feature_ratios"] = kwargs.pop("ratios")
    for k, v in overrides.items():
        if v is not None:
            kwargs[k] = v
    return ExperimentConfig(
        manifest=manifest,
        synthetic=SyntheticSpec(**syn) if syn else None,
        hyperparams=HyperParams(**hp),
        **kwargs,
    )


def load_config(path, **overrides) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, base_dir=path.parent, **overrides)


# ----------------------------------------------------------------------------
# pipeline pieces


def prepare_dataset(config: ExperimentConfig) -> MultiChannelDataset:
    """Load or synthesise, binarize labels, and min-max normalise features."""
    if config.manifest is not None:
        data = load_dataset(config.manifest)
        data = binarize_labels(data, config.threshold, config.strict_threshold)
    else:
        data, _ = config.synthetic.generate()
    return normalize_features(data)


def baseline_random(feature_counts, seed: int) -> FeatureRanking:
    """Seeded uniform shuffle of every ``(channel, feature)`` pair."""
    chan = np.concatenate([np.full(d, v) for v, d in enumerate(feature_counts)])
    feat = np.concatenate([np.arange(d) for d in feature_counts])
    perm = np.random.default_rng(seed).permutation(chan.size)
    score = np.arange(chan.size, 0, -1, dtype=float) / chan.size
    return FeatureRanking(chan[perm], feat[perm], score)


def baseline_variance(dataset: MultiChannelDataset) -> FeatureRanking:
    """Rank feature rows by descending variance across instances."""
    return FeatureRanking.from_scores([np.var(x, axis=1) for x in dataset.X])


def _split(data, config, seed):
    if config.split == "subject":
        return split_subjectwise(data, config.train_fraction, seed)
    return split_instancewise(data, config.train_fraction, seed)


def _score_subset(train, test, pairs, config) -> MetricsReport:
    model = mlknn.fit(train.stacked_features(pairs), train.labels_binary,
                      config.k_neighbors, config.smoothing)
    pred, scores = mlknn.predict(model, test.stacked_features(pairs))
    return evaluate(pred, scores, test.labels_binary)


def _rankings(train, config, seed, fixed):
    if fixed is not None:
        return fixed
    graphs = build_graphs(train, config.q, config.sigma)
    state = solve(train, graphs, config.hyperparams, seed=seed)
    out = {"cwefs": rank_features(state)}
    if "random" in config.baselines:
        out["random"] = baseline_random(train.feature_counts, seed)
    if "variance" in config.baselines:
        out["variance"] = baseline_variance(train)
    return out


@dataclass(frozen=True)
class TrialRecord:
    method: str
    ratio: float
    trial: int
    metrics: MetricsReport


def _run_trial(data, config, trial, fixed=None):
    seed = config.seed + trial
    stage = "split"
    try:
        plan = _split(data, config, seed)
        train, test = data.subset(plan.train_instances), data.subset(plan.test_instances)
        stage = "select"
        rankings = _rankings(train, config, seed, fixed)
        records = []
        for method, ranking in rankings.items():
            for ratio in config.feature_ratios:
                stage = f"evaluate {method} @ {ratio:g}"
                pairs = select_top(ranking, ratio)
                records.append(TrialRecord(method, ratio, trial,
                                           _score_subset(train, test, pairs, config)))
        return records
    except CwefsError as exc:
        raise TrialError(trial, stage, exc) from exc


@dataclass
class SweepReport:
    """Per-trial metric values plus aggregation over trials."""

    methods: tuple
    ratios: tuple
    trials: tuple
    records: list = field(default_factory=list)

    def values(self, method, ratio, metric) -> np.ndarray:
        return np.array([
            getattr(r.metrics, metric) for r in self.records
            if r.method == method and r.ratio == ratio
        ])

    def aggregate(self) -> dict:
        """``{(method, ratio): {metric: (mean, std)}}``; std is the population std."""
        out = {}
        for m in self.methods:
            for r in self.ratios:
                out[(m, r)] = {
                    name: (float(np.mean(v)), float(np.std(v)))
                    for name in METRIC_NAMES
                    for v in [self.values(m, r, name)]
                }
        return out


def run_experiment(config: ExperimentConfig, threads: int = 1,
                   trial_indices=None, dataset=None) -> SweepReport:
    """Run the full selection/evaluation protocol.

    Trial ``t`` uses seed ``config.seed + t`` for both the split and the
    solver initialisation. Results are collected in trial order, so the
    worker count never changes the report.
    """
    data = dataset if dataset is not None else prepare_dataset(config)
    trials = tuple(range(config.trials)) if trial_indices is None else tuple(trial_indices)
    return _run(data, config, trials, threads, None, config.methods)


def evaluate_ranking(config: ExperimentConfig, ranking: FeatureRanking,
                     threads: int = 1, name: str = "ranking", dataset=None) -> SweepReport:
    """Evaluate one fixed ranking with the trial protocol (no re-selection)."""
    data = dataset if dataset is not None else prepare_dataset(config)
    if len(ranking) != data.total_features:
        raise ConfigError(
            f"ranking covers {len(ranking)} features, dataset has {data.total_features}"
        )
    return _run(data, config, tuple(range(config.trials)), threads, {name: ranking}, (name,))


def _run(data, config, trials, threads, fixed, methods):
    def job(t):
        return _run_trial(data, config, t, fixed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, trials))
    else:
        results = [job(t) for t in trials]
    report = SweepReport(methods, config.feature_ratios, trials)
    for recs in results:
        report.records.extend(recs)
    return report


# ----------------------------------------------------------------------------
# output


def _fmt(x):
    return format(float(x), ".17g")


def emit_report(report: SweepReport, out_dir) -> list:
    """Write ``aggregate.csv``, ``trials.csv`` and ``summary.json``.

    aggregate.csv: ``method,ratio,metric,mean,std``
    trials.csv:    ``method,ratio,trial,<six metrics>``
    summary.json:  flat object, keys ``<method>@<ratio>.<metric>`` -> mean
    """
    if not report.ratios:
        raise ConfigError("report has no feature ratios")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    agg = report.aggregate()

    lines = ["method,ratio,metric,mean,std"]
    summary = {}
    for (m, r), stats in agg.items():
        for name in METRIC_NAMES:
            mean, std = stats[name]
            lines.append(f"{m},{r:g},{name},{_fmt(mean)},{_fmt(std)}")
            summary[f"{m}@{r:g}.{name}"] = mean
    (out / "aggregate.csv").write_text("\n".join(lines) + "\n")

    lines = ["method,ratio,trial," + ",".join(METRIC_NAMES)]
    for rec in report.records:
        vals = ",".join(_fmt(getattr(rec.metrics, n)) for n in METRIC_NAMES)
        lines.append(f"{rec.method},{rec.ratio:g},{rec.trial},{vals}")
    (out / "trials.csv").write_text("\n".join(lines) + "\n")

    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return [out / f for f in REPORT_FILES]
