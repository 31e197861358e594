"""Channel-weighted multi-view NMF feature selection for multi-label data."""

from .dataset import (
    ChannelBlock,
    MultiChannelDataset,
    SplitPlan,
    binarize_labels,
    generate_synthetic,
    load_dataset,
    normalize_features,
    save_dataset,
    split_instancewise,
    split_subjectwise,
)
from .exceptions import ConfigError, CwefsError, DataError, NumericalError
from .experiment import (
    ExperimentConfig,
    SweepReport,
    SyntheticSpec,
    baseline_random,
    baseline_variance,
    emit_report,
    load_config,
    run_experiment,
)
from .graph import GraphSet, build_affinity, build_graphs, build_laplacian
from .metrics import MetricsReport, evaluate, friedman_statistic
from .solver import FeatureRanking, HyperParams, SolverState, rank_features, select_top, solve

__version__ = "0.1.0"
