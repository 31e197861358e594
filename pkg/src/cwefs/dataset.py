"""Multi-channel feature data: container types, disk I/O, preprocessing.

Feature matrices are stored features-by-instances (``d_v x n``) and the
label matrix labels-by-instances (``k x n``), so every array in a dataset
shares its column axis.

On-disk layout
--------------
A manifest is a plain-text file of ``key value`` lines::

    # comment
    header=false
    channel Fp1 features/fp1.csv
    channel Fp2 features/fp2.csv
    labels labels.csv
    subjects subjects.txt

Paths are relative to the manifest's directory. ``subjects`` may instead
name an integer row index of the labels file; that row then holds the
subject identifiers and is dropped from the label matrix. Every CSV is
comma-separated decimal text, one matrix row per line.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .exceptions import ConfigError, DataError, DimensionMismatchError, ParseError

__all__ = [
    "ChannelBlock",
    "MultiChannelDataset",
    "SplitPlan",
    "SyntheticGroundTruth",
    "load_dataset",
    "save_dataset",
    "read_matrix_csv",
    "write_matrix_csv",
    "binarize_labels",
    "normalize_features",
    "split_subjectwise",
    "split_instancewise",
    "generate_synthetic",
]

FLOAT_FORMAT = ".17g"


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ChannelBlock:
    """Feature matrix of one channel, shape ``(d_v, n)``."""

    features: np.ndarray
    channel_name: str = ""

    def __post_init__(self):
        feats = _frozen(self.features)
        if feats.ndim != 2:
            raise DataError(f"channel {self.channel_name!r}: features must be 2-D")
        if not np.all(np.isfinite(feats)):
            raise DataError(f"channel {self.channel_name!r}: non-finite feature value")
        object.__setattr__(self, "features", feats)

    @property
    def d_v(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class MultiChannelDataset:
    """Immutable multi-channel dataset.

    Attributes
    ----------
    channels : tuple of ChannelBlock
        One block per channel, each ``d_v x n``.
    labels_raw : ndarray, shape (k, n)
        Real-valued dimensional scores.
    subject_ids : tuple of str
        Subject identifier of every instance.
    labels_binary : ndarray of {0, 1}, shape (k, n), optional
        Present after :func:`binarize_labels`.
    """

    channels: tuple
    labels_raw: np.ndarray
    subject_ids: tuple
    labels_binary: Optional[np.ndarray] = None

    def __post_init__(self):
        channels = tuple(self.channels)
        if len(channels) < 1:
            raise DataError("dataset needs at least one channel")
        raw = _frozen(self.labels_raw)
        if raw.ndim != 2 or raw.shape[0] < 1:
            raise DataError("labels_raw must be a k x n matrix with k >= 1")
        n = raw.shape[1]
        if n < 2:
            raise DataError("dataset needs at least two instances")
        for block in channels:
            if block.features.shape[1] != n:
                raise DataError(
                    f"channel {block.channel_name!r} has {block.features.shape[1]} "
                    f"columns, labels have {n}"
                )
        subjects = tuple(str(s) for s in self.subject_ids)
        if len(subjects) != n:
            raise DataError(f"{len(subjects)} subject ids for {n} instances")
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "labels_raw", raw)
        object.__setattr__(self, "subject_ids", subjects)
        if self.labels_binary is not None:
            yb = _frozen(self.labels_binary, dtype=np.int8)
            if yb.shape != raw.shape:
                raise DataError("labels_binary shape differs from labels_raw")
            if not np.all((yb == 0) | (yb == 1)):
                raise DataError("labels_binary must contain only 0 and 1")
            object.__setattr__(self, "labels_binary", yb)

    @property
    def n(self) -> int:
        return self.labels_raw.shape[1]

    @property
    def k(self) -> int:
        return self.labels_raw.shape[0]

    @property
    def ch(self) -> int:
        return len(self.channels)

    @property
    def feature_counts(self) -> list:
        return [b.d_v for b in self.channels]

    @property
    def total_features(self) -> int:
        return sum(self.feature_counts)

    @property
    def X(self) -> list:
        """Per-channel feature matrices."""
        return [b.features for b in self.channels]

    def subset(self, instances) -> "MultiChannelDataset":
        """Restrict every matrix to the given instance (column) indices."""
        idx = np.asarray(instances, dtype=int)
        return MultiChannelDataset(
            channels=tuple(
                ChannelBlock(b.features[:, idx], b.channel_name) for b in self.channels
            ),
            labels_raw=self.labels_raw[:, idx],
            subject_ids=tuple(self.subject_ids[i] for i in idx),
            labels_binary=None if self.labels_binary is None else self.labels_binary[:, idx],
        )

    def stacked_features(self, pairs=None) -> np.ndarray:
        """Stack feature rows into one ``(m, n)`` matrix.

        ``pairs`` is an iterable of ``(channel, feature)`` indices; rows are
        emitted in ascending ``(channel, feature)`` order regardless of the
        order given. ``None`` stacks every row.
        """
        if pairs is None:
            return np.vstack(self.X)
        pairs = sorted({(int(c), int(f)) for c, f in pairs})
        if not pairs:
            raise DataError("no features selected")
        return np.vstack([self.channels[c].features[f] for c, f in pairs])


@dataclass(frozen=True)
class SplitPlan:
    train_instances: np.ndarray
    test_instances: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "train_instances", _frozen(self.train_instances, int))
        object.__setattr__(self, "test_instances", _frozen(self.test_instances, int))


@dataclass(frozen=True)
class SyntheticGroundTruth:
    relevant_features: frozenset
    planted_latent: np.ndarray
    planted_loadings: tuple = field(default=(), repr=False)
    planted_label_map: Optional[np.ndarray] = field(default=None, repr=False)


# ----------------------------------------------------------------------------
# CSV / manifest I/O


def read_matrix_csv(path, header=False) -> np.ndarray:
    """Read a dense numeric CSV into a 2-D float array.

    Raises :class:`ParseError` (1-based row/column) for any cell that is not
    a finite decimal number, and :class:`DataError` for ragged rows.
    """
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for r, line in enumerate(reader, start=1):
            if header and r == 1:
                continue
            if not line or all(not cell.strip() for cell in line):
                continue
            values = []
            for c, cell in enumerate(line, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(path, r, c, cell) from None
                if not math.isfinite(v):
                    raise ParseError(path, r, c, cell)
                values.append(v)
            if rows and len(values) != len(rows[0]):
                raise DataError(
                    f"{path}: row {r} has {len(values)} cells, expected {len(rows[0])}"
                )
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def write_matrix_csv(path, matrix) -> None:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", newline="") as fh:
        for row in matrix:
            fh.write(",".join(format(float(v), FLOAT_FORMAT) for v in row))
            fh.write("\n")


def _read_tokens(path) -> list:
    text = Path(path).read_text()
    return [t.strip() for t in text.replace(",", "\n").splitlines() if t.strip()]


def _parse_manifest(manifest):
    manifest = Path(manifest)
    spec = {"channels": [], "labels": None, "subjects": None, "header": False}
    for lineno, raw in enumerate(manifest.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line and " " not in line.split("=", 1)[0]:
            key, _, value = line.partition("=")
            if key.strip() == "header":
                spec["header"] = value.strip().lower() in ("1", "true", "yes")
                continue
        parts = line.split()
        key = parts[0]
        if key == "channel" and len(parts) == 3:
            spec["channels"].append((parts[1], parts[2]))
        elif key == "labels" and len(parts) == 2:
            spec["labels"] = parts[1]
        elif key == "subjects" and len(parts) == 2:
            spec["subjects"] = parts[1]
        else:
            raise DataError(f"{manifest}:{lineno}: unrecognised manifest line {raw!r}")
    if not spec["channels"]:
        raise DataError(f"{manifest}: no channel entries")
    if spec["labels"] is None:
        raise DataError(f"{manifest}: missing labels entry")
    if spec["subjects"] is None:
        raise DataError(f"{manifest}: missing subjects entry")
    return spec


def load_dataset(manifest, feature_dir=None, labels_file=None) -> MultiChannelDataset:
    """Load a dataset described by a manifest file.

    Parameters
    ----------
    manifest : path
        Manifest listing channels, labels and subjects (see module docstring).
    feature_dir : path, optional
        Base directory for channel files; defaults to the manifest's directory.
    labels_file : path, optional
        Overrides the manifest's labels entry.

    Returns
    -------
    MultiChannelDataset
        Channels in manifest order, raw label scores, no binarization.
    """
    manifest = Path(manifest)
    base = manifest.parent
    spec = _parse_manifest(manifest)
    header = spec["header"]
    fdir = Path(feature_dir) if feature_dir is not None else base
    lpath = Path(labels_file) if labels_file is not None else base / spec["labels"]

    labels = read_matrix_csv(lpath, header=header)
    n = labels.shape[1]

    subj = spec["subjects"]
    spath = base / subj
    if spath.is_file():
        subjects = _read_tokens(spath)
        if len(subjects) != n:
            raise DimensionMismatchError(spath, n, len(subjects))
    else:
        try:
            row = int(subj)
        except ValueError:
            raise DataError(f"{manifest}: subjects file {spath} not found") from None
        if not 0 <= row < labels.shape[0]:
            raise DataError(f"{manifest}: subject row {row} outside labels file")
        subjects = [format(v, "g") for v in labels[row]]
        labels = np.delete(labels, row, axis=0)
        if labels.shape[0] == 0:
            raise DataError(f"{lpath}: no label rows besides the subject row")

    blocks = []
    for name, rel in spec["channels"]:
        cpath = fdir / rel
        feats = read_matrix_csv(cpath, header=header)
        if feats.shape[1] != n:
            raise DimensionMismatchError(cpath, n, feats.shape[1])
        blocks.append(ChannelBlock(feats, name))
    return MultiChannelDataset(tuple(blocks), labels, tuple(subjects))


def save_dataset(dataset: MultiChannelDataset, out_dir) -> Path:
    """Write ``dataset`` in the manifest layout; returns the manifest path.

    Values are written with 17 significant digits so that loading the files
    back reproduces every matrix bit for bit.
    """
    out = Path(out_dir)
    (out / "features").mkdir(parents=True, exist_ok=True)
    lines = []
    for v, block in enumerate(dataset.channels):
        name = block.channel_name or f"ch{v}"
        rel = f"features/{v:03d}_{_safe(name)}.csv"
        write_matrix_csv(out / rel, block.features)
        lines.append(f"channel {name} {rel}")
    write_matrix_csv(out / "labels.csv", dataset.labels_raw)
    (out / "subjects.txt").write_text("\n".join(dataset.subject_ids) + "\n")
    lines += ["labels labels.csv", "subjects subjects.txt"]
    path = out / "manifest.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


def _safe(name):
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in name)


# ----------------------------------------------------------------------------
# preprocessing


def binarize_labels(dataset: MultiChannelDataset, threshold: float = 5.0,
                    strict: bool = True) -> MultiChannelDataset:
    """Dichotomise label scores into low (0) / high (1).

    With ``strict=True`` a score is high when it is ``> threshold``;
    ``strict=False`` uses ``>=``.
    """
    raw = dataset.labels_raw
    high = raw > threshold if strict else raw >= threshold
    return replace(dataset, labels_binary=high.astype(np.int8))


def normalize_features(dataset: MultiChannelDataset) -> MultiChannelDataset:
    """Min-max scale every feature row to [0, 1]; constant rows become 0."""
    blocks = []
    for b in dataset.channels:
        x = b.features
        lo = x.min(axis=1, keepdims=True)
        span = x.max(axis=1, keepdims=True) - lo
        safe = np.where(span > 0, span, 1.0)
        scaled = np.where(span > 0, (x - lo) / safe, 0.0)
        # guards the upper end against rounding above 1
        blocks.append(ChannelBlock(np.clip(scaled, 0.0, 1.0), b.channel_name))
    return replace(dataset, channels=tuple(blocks))


def split_subjectwise(dataset: MultiChannelDataset, train_fraction: float = 0.8,
                      seed: int = 0) -> SplitPlan:
    """Random train/test split that keeps each subject on one side.

    Distinct subjects (in sorted order) are shuffled with a generator seeded
    by ``seed``; the first ``ceil(train_fraction * n_subjects)`` of them form
    the training side, capped so that at least one subject is held out.
    """
    if not 0 < train_fraction < 1:
        raise ConfigError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    subjects = np.asarray(dataset.subject_ids)
    unique = sorted(set(dataset.subject_ids))
    if len(unique) < 2:
        raise DataError("subject-wise split needs at least two distinct subjects")
    rng = np.random.default_rng(seed)
    order = [unique[i] for i in rng.permutation(len(unique))]
    n_train = min(_ceil(train_fraction * len(unique)), len(unique) - 1)
    train_subjects = set(order[:n_train])
    mask = np.array([s in train_subjects for s in subjects])
    return SplitPlan(np.flatnonzero(mask), np.flatnonzero(~mask), seed)


def split_instancewise(dataset: MultiChannelDataset, train_fraction: float = 0.8,
                       seed: int = 0) -> SplitPlan:
    """Instance-level split for data without meaningful subject ids."""
    if not 0 < train_fraction < 1:
        raise ConfigError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = dataset.n
    perm = np.random.default_rng(seed).permutation(n)
    n_train = min(max(_ceil(train_fraction * n), 1), n - 1)
    return SplitPlan(np.sort(perm[:n_train]), np.sort(perm[n_train:]), seed)


def _ceil(x):
    # absorbs binary representation error, e.g. 0.3 * 10 -> 3.0000000000000004
    return math.ceil(x - 1e-9)


# ----------------------------------------------------------------------------
# synthetic data


def generate_synthetic(ch: int, d_per_channel, n: int, k: int,
                       relevant_per_channel: int, noise_sigma: float = 0.0,
                       seed: int = 0, n_subjects: int = 10):
    """Draw a dataset with a planted low-rank non-negative structure.

    A latent matrix ``U*`` (n x k) and per-channel loadings ``Q*`` (d_v x k)
    are drawn; only ``relevant_per_channel`` randomly chosen rows of each
    ``Q*`` are nonzero. Features are ``max(Q* U*^T + noise, 0)``. Labels are
    scores ``M* U*^T`` mapped onto a 1..9 scale centred at 5 on each label's
    median, and binarized at 5.

    Returns
    -------
    (MultiChannelDataset, SyntheticGroundTruth)
    """
    if isinstance(d_per_channel, (int, np.integer)):
        d_per_channel = [int(d_per_channel)] * ch
    d_per_channel = [int(d) for d in d_per_channel]
    if ch < 1 or len(d_per_channel) != ch:
        raise ConfigError("d_per_channel must give one feature count per channel")
    if k < 1 or n <= k:
        raise ConfigError(f"need n > k >= 1, got n={n}, k={k}")
    if not 1 <= relevant_per_channel <= min(d_per_channel):
        raise ConfigError("relevant_per_channel must lie in [1, min(d_per_channel)]")
    if relevant_per_channel * ch >= sum(d_per_channel):
        raise ConfigError("relevant features must be a strict subset of all features")
    if noise_sigma < 0:
        raise ConfigError("noise_sigma must be non-negative")
    if not 2 <= n_subjects <= n:
        raise ConfigError("n_subjects must lie in [2, n]")

    rng = np.random.default_rng(seed)
    latent = rng.uniform(0.0, 1.0, size=(n, k))
    label_map = 0.7 * np.eye(k) + 0.3 / k

    blocks, loadings, relevant = [], [], set()
    for v, d in enumerate(d_per_channel):
        rows = np.sort(rng.choice(d, size=relevant_per_channel, replace=False))
        q = np.zeros((d, k))
        q[rows] = rng.uniform(0.2, 1.0, size=(relevant_per_channel, k))
        x = q @ latent.T
        if noise_sigma > 0:
            x = np.maximum(x + rng.normal(0.0, noise_sigma, size=x.shape), 0.0)
        blocks.append(ChannelBlock(x, f"ch{v}"))
        loadings.append(q)
        relevant.update((v, int(r)) for r in rows)

    scores = label_map @ latent.T
    med = np.median(scores, axis=1, keepdims=True)
    spread = np.max(np.abs(scores - med), axis=1, keepdims=True)
    raw = 5.0 + 4.0 * (scores - med) / np.where(spread > 0, spread, 1.0)

    # contiguous runs of instances per subject
    subjects = tuple(f"s{(i * n_subjects) // n:03d}" for i in range(n))

    data = binarize_labels(MultiChannelDataset(tuple(blocks), raw, subjects))
    truth = SyntheticGroundTruth(
        relevant_features=frozenset(relevant),
        planted_latent=_frozen(latent),
        planted_loadings=tuple(_frozen(q) for q in loadings),
        planted_label_map=_frozen(label_map),
    )
    return data, truth


def planted_dataset(Xs: Sequence, Y, subject_ids=None) -> MultiChannelDataset:
    """Wrap raw arrays (already binary labels) into a dataset."""
    Y = np.asarray(Y)
    n = Y.shape[1]
    subjects = subject_ids if subject_ids is not None else [f"s{i}" for i in range(n)]
    blocks = tuple(ChannelBlock(x, f"ch{v}") for v, x in enumerate(Xs))
    return MultiChannelDataset(blocks, Y.astype(float), tuple(subjects), labels_binary=Y)
