import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cwefs.dataset import (
    ChannelBlock,
    MultiChannelDataset,
    binarize_labels,
    generate_synthetic,
    load_dataset,
    normalize_features,
    read_matrix_csv,
    save_dataset,
    split_instancewise,
    split_subjectwise,
    write_matrix_csv,
)
from cwefs.exceptions import ConfigError, DataError, DimensionMismatchError, ParseError


def _dataset(Xs, labels, subjects=None):
    labels = np.asarray(labels, dtype=float)
    n = labels.shape[1]
    subjects = subjects or [f"s{i}" for i in range(n)]
    blocks = tuple(ChannelBlock(np.asarray(x, float), f"c{v}") for v, x in enumerate(Xs))
    return MultiChannelDataset(blocks, labels, tuple(subjects))


def _write_layout(root, shapes, n_labels=3, n=10, subjects=None):
    rng = np.random.default_rng(0)
    lines = []
    (root / "feat").mkdir()
    for v, d in enumerate(shapes):
        cols = n if not isinstance(d, tuple) else d[1]
        rows = d if not isinstance(d, tuple) else d[0]
        write_matrix_csv(root / "feat" / f"c{v}.csv", rng.uniform(size=(rows, cols)))
        lines.append(f"channel c{v} feat/c{v}.csv")
    write_matrix_csv(root / "labels.csv", rng.uniform(1, 9, size=(n_labels, n)))
    subjects = subjects or [f"p{i // 2}" for i in range(n)]
    (root / "subjects.txt").write_text("\n".join(subjects) + "\n")
    lines += ["labels labels.csv", "subjects subjects.txt"]
    (root / "manifest.txt").write_text("\n".join(lines) + "\n")
    return root / "manifest.txt"


class TestLoad:
    def test_shapes(self, tmp_path):
        manifest = _write_layout(tmp_path, [3, 4])
        data = load_dataset(manifest)
        assert (data.ch, data.n, data.k) == (2, 10, 3)
        assert data.feature_counts == [3, 4]
        assert [b.channel_name for b in data.channels] == ["c0", "c1"]
        assert data.labels_binary is None

    def test_column_mismatch_names_file(self, tmp_path):
        manifest = _write_layout(tmp_path, [3, (4, 9)])
        with pytest.raises(DimensionMismatchError) as err:
            load_dataset(manifest)
        assert err.value.path.endswith("c1.csv")
        assert (err.value.expected, err.value.found) == (10, 9)

    def test_nan_label_reports_location(self, tmp_path):
        manifest = _write_layout(tmp_path, [3])
        lines = (tmp_path / "labels.csv").read_text().splitlines()
        cells = lines[1].split(",")
        cells[4] = "NaN"
        lines[1] = ",".join(cells)
        (tmp_path / "labels.csv").write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError) as err:
            load_dataset(manifest)
        assert (err.value.row, err.value.column) == (2, 5)
        assert "labels.csv" in str(err.value)

    def test_non_numeric_cell(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("1,2\n3,abc\n")
        with pytest.raises(ParseError, match="row 2, column 2"):
            read_matrix_csv(p)

    def test_header_flag(self, tmp_path):
        manifest = _write_layout(tmp_path, [2])
        for name in ("feat/c0.csv", "labels.csv"):
            p = tmp_path / name
            p.write_text("h\n" + p.read_text())
        manifest.write_text("header=true\n" + manifest.read_text())
        assert load_dataset(manifest).n == 10

    def test_subject_row_in_labels(self, tmp_path):
        manifest = _write_layout(tmp_path, [2])
        labels = read_matrix_csv(tmp_path / "labels.csv")
        ids = np.repeat(np.arange(5), 2)
        write_matrix_csv(tmp_path / "labels.csv", np.vstack([labels, ids]))
        manifest.write_text(manifest.read_text().replace("subjects subjects.txt", "subjects 3"))
        data = load_dataset(manifest)
        assert data.k == 3
        assert data.subject_ids[:4] == ("0", "0", "1", "1")

    def test_round_trip_bit_exact(self, tmp_path):
        data, _ = generate_synthetic(2, [5, 7], 12, 2, 2, 0.3, seed=4)
        manifest = save_dataset(data, tmp_path / "a")
        again = load_dataset(manifest)
        manifest2 = save_dataset(again, tmp_path / "b")
        third = load_dataset(manifest2)
        for a, b, c in zip(data.X, again.X, third.X):
            assert np.array_equal(a, b) and np.array_equal(b, c)
        assert np.array_equal(data.labels_raw, again.labels_raw)
        assert data.subject_ids == again.subject_ids

    def test_invariants_enforced(self):
        with pytest.raises(DataError):
            _dataset([np.ones((2, 3))], np.ones((1, 4)))
        with pytest.raises(DataError):
            _dataset([np.ones((2, 1))], np.ones((1, 1)))
        with pytest.raises(DataError):
            _dataset([np.array([[np.inf, 1.0]])], np.ones((1, 2)))

    def test_dataset_is_immutable(self):
        data = _dataset([np.ones((2, 3))], np.ones((1, 3)))
        with pytest.raises(ValueError):
            data.channels[0].features[0, 0] = 5.0


class TestBinarize:
    def test_examples(self):
        data = _dataset([np.zeros((1, 4))], [[1, 9, 5, 6]])
        out = binarize_labels(data, 5)
        assert out.labels_binary.tolist() == [[0, 1, 0, 1]]
        np.testing.assert_array_equal(out.labels_raw, data.labels_raw)

    def test_single_scores(self):
        data = _dataset([np.zeros((1, 2))], [[7.2, 5.0]])
        assert binarize_labels(data).labels_binary.tolist() == [[1, 0]]
        assert binarize_labels(data, strict=False).labels_binary.tolist() == [[1, 1]]

    @given(arrays(float, st.tuples(st.integers(1, 4), st.integers(2, 8)),
                  elements=st.floats(-10, 10)))
    def test_binary_same_shape(self, raw):
        data = _dataset([np.zeros((1, raw.shape[1]))], raw)
        yb = binarize_labels(data, 0.5).labels_binary
        assert yb.shape == raw.shape
        assert set(np.unique(yb)) <= {0, 1}


class TestNormalize:
    @pytest.mark.parametrize("row, expected", [
        ([2, 4, 6], [0, 0.5, 1]),
        ([3, 3, 3], [0, 0, 0]),
        ([-1, 0, 1], [0, 0.5, 1]),
    ])
    def test_examples(self, row, expected):
        out = normalize_features(_dataset([[row]], np.zeros((1, 3))))
        np.testing.assert_array_equal(out.X[0][0], expected)

    @settings(max_examples=60)
    @given(arrays(float, st.tuples(st.integers(1, 5), st.integers(2, 8)),
                  elements=st.floats(-1e6, 1e6)))
    def test_idempotent_and_bounded(self, x):
        once = normalize_features(_dataset([x], np.zeros((1, x.shape[1]))))
        twice = normalize_features(once)
        assert np.array_equal(once.X[0], twice.X[0])
        assert once.X[0].min() >= 0 and once.X[0].max() <= 1


class TestSplit:
    def _subjects(self, n_subj, per):
        subj = [f"p{i}" for i in range(n_subj) for _ in range(per)]
        n = len(subj)
        return _dataset([np.zeros((1, n))], np.zeros((1, n)), subj)

    def test_five_subjects(self):
        data = self._subjects(5, 2)
        plan = split_subjectwise(data, 0.8, seed=3)
        train = {data.subject_ids[i] for i in plan.train_instances}
        test = {data.subject_ids[i] for i in plan.test_instances}
        assert (len(train), len(test)) == (4, 1)

    def test_sizes_and_disjoint(self):
        data = self._subjects(10, 3)
        plan = split_subjectwise(data, 0.8, seed=11)
        assert (len(plan.train_instances), len(plan.test_instances)) == (24, 6)
        train = {data.subject_ids[i] for i in plan.train_instances}
        test = {data.subject_ids[i] for i in plan.test_instances}
        assert not train & test
        assert sorted(np.concatenate([plan.train_instances, plan.test_instances])) == list(range(30))

    def test_deterministic(self):
        data = self._subjects(7, 2)
        a = split_subjectwise(data, 0.8, seed=5)
        b = split_subjectwise(data, 0.8, seed=5)
        assert np.array_equal(a.train_instances, b.train_instances)
        assert np.array_equal(a.test_instances, b.test_instances)

    def test_seed_changes_split(self):
        data = self._subjects(10, 1)
        plans = {tuple(split_subjectwise(data, 0.8, seed=s).test_instances) for s in range(10)}
        assert len(plans) > 1

    @given(st.integers(2, 12), st.integers(1, 4), st.floats(0.05, 0.95), st.integers(0, 2**31))
    def test_subjects_never_straddle(self, n_subj, per, frac, seed):
        data = self._subjects(n_subj, per)
        plan = split_subjectwise(data, frac, seed)
        train = {data.subject_ids[i] for i in plan.train_instances}
        test = {data.subject_ids[i] for i in plan.test_instances}
        assert not train & test and test

    def test_errors(self):
        with pytest.raises(DataError):
            split_subjectwise(self._subjects(1, 4), 0.8, 0)
        with pytest.raises(ConfigError):
            split_subjectwise(self._subjects(4, 1), 1.0, 0)

    def test_instancewise(self):
        data = self._subjects(1, 10)
        plan = split_instancewise(data, 0.8, seed=1)
        assert (len(plan.train_instances), len(plan.test_instances)) == (8, 2)


class TestSynthetic:
    def test_noiseless_irrelevant_rows_zero(self):
        data, truth = generate_synthetic(3, [6, 7, 8], 20, 2, 2, 0.0, seed=1)
        for v, x in enumerate(data.X):
            for f in range(x.shape[0]):
                if (v, f) not in truth.relevant_features:
                    assert not x[f].any()

    def test_noiseless_exact_factorization(self):
        data, truth = generate_synthetic(2, 9, 25, 3, 3, 0.0, seed=2)
        for x, q in zip(data.X, truth.planted_loadings):
            assert np.array_equal(x, q @ truth.planted_latent.T)

    def test_single_channel(self):
        data, truth = generate_synthetic(1, 5, 10, 2, 2, 0.1, seed=0)
        assert data.ch == 1 and data.labels_binary is not None
        assert 0 < len(truth.relevant_features) < 5

    def test_deterministic(self):
        a, ta = generate_synthetic(2, 6, 15, 2, 2, 0.2, seed=9)
        b, tb = generate_synthetic(2, 6, 15, 2, 2, 0.2, seed=9)
        for x, y in zip(a.X, b.X):
            assert x.tobytes() == y.tobytes()
        assert a.labels_raw.tobytes() == b.labels_raw.tobytes()
        assert ta.relevant_features == tb.relevant_features

    def test_nonnegative_with_noise(self):
        data, _ = generate_synthetic(2, 6, 15, 2, 2, 0.5, seed=9)
        assert all(x.min() >= 0 for x in data.X)

    @pytest.mark.parametrize("kwargs", [
        dict(relevant_per_channel=7),
        dict(n=2),
        dict(relevant_per_channel=6),
        dict(noise_sigma=-1.0),
    ])
    def test_bad_parameters(self, kwargs):
        base = dict(ch=2, d_per_channel=6, n=15, k=2, relevant_per_channel=2,
                    noise_sigma=0.0, seed=0)
        base.update(kwargs)
        with pytest.raises(ConfigError):
            generate_synthetic(**base)
