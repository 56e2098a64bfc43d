import numpy as np
import pytest

from localpar import data
from localpar.data import (BatchIterator, CifarFormatError, Dataset,
                           load_cifar10_binary, randomize_labels,
                           serialize_cifar10, synthetic_clusters)
from localpar.tensor import Rng


def _write_records(tmp_path, records):
    path = tmp_path / "data_batch_1.bin"
    path.write_bytes(b"".join(records))
    return path


class TestCifarLoader:
    def test_all_zero_records(self, tmp_path):
        path = _write_records(tmp_path, [bytes(3073)] * 2)
        ds = load_cifar10_binary([path])
        assert list(ds.labels) == [0, 0]
        assert ds.inputs.shape == (2, 3072)
        assert np.all(ds.inputs == 0.0)

    def test_saturated_record(self, tmp_path):
        path = _write_records(tmp_path, [bytes([7]) + bytes([255]) * 3072])
        ds = load_cifar10_binary([path])
        assert ds.labels[0] == 7
        assert np.all(ds.inputs == 1.0)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        raw = rng.integers(0, 256, size=100 * 3073, dtype=np.uint8)
        raw.reshape(-1, 3073)[:, 0] = rng.integers(0, 10, size=100)
        path = tmp_path / "data_batch_1.bin"
        path.write_bytes(raw.tobytes())
        ds = load_cifar10_binary([path])
        assert serialize_cifar10(ds) == raw.tobytes()

    def test_prefix_subset(self, tmp_path):
        path = _write_records(tmp_path, [bytes(3073)] * 5)
        assert load_cifar10_binary([path], max_records=3).n == 3

    def test_truncated_file(self, tmp_path):
        path = tmp_path / "data_batch_1.bin"
        path.write_bytes(bytes(3072))
        with pytest.raises(CifarFormatError):
            load_cifar10_binary([path])

    def test_bad_label_byte(self, tmp_path):
        path = _write_records(tmp_path, [bytes([11]) + bytes(3072)])
        with pytest.raises(CifarFormatError):
            load_cifar10_binary([path])

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_cifar10_binary(["/nonexistent/data_batch_1.bin"])


class TestSyntheticClusters:
    def test_one_sample_per_class(self):
        ds = synthetic_clusters(Rng(0), 10, 8, 10, 5.0)
        assert sorted(ds.labels) == list(range(10))

    def test_zero_separation_means_identical(self):
        ds = synthetic_clusters(Rng(0), 500, 4, 5, 0.0)
        # per-class means all estimate the same (zero) cluster center
        centers = np.array([ds.inputs[ds.labels == c].mean(axis=0) for c in range(5)])
        assert np.abs(centers).max() < 0.5

    def test_minimum_mean_separation(self):
        rng = Rng(3)
        sep = 10.0
        ds = synthetic_clusters(rng, 1000, 16, 10, sep)
        centers = np.array([ds.inputs[ds.labels == c].mean(axis=0) for c in range(10)])
        for a in range(10):
            for b in range(a + 1, 10):
                assert np.linalg.norm(centers[a] - centers[b]) > sep * 0.7

    def test_large_margin_is_learnable(self):
        # one-layer softmax on separation-10 data reaches ~perfect train acc
        from localpar.executor import train_sequential
        from localpar.model import NetworkSpec, Scheme
        ds = synthetic_clusters(Rng(0), 256, 16, 10, 10.0)
        spec = NetworkSpec(16, 16, 1, 10, Scheme("backprop"))
        log, _ = train_sequential(spec, ds, "adam", 1e-2, 200, 64, 0, eval_every=200)
        assert log.final_eval("train_acc") >= 0.99


class TestRandomizeLabels:
    def test_single_class_unchanged(self):
        ds = synthetic_clusters(Rng(0), 50, 4, 1, 1.0)
        out = randomize_labels(ds, Rng(1))
        assert np.array_equal(out.labels, ds.labels)

    def test_histogram_near_uniform(self):
        ds = synthetic_clusters(Rng(0), 10000, 4, 10, 1.0)
        out = randomize_labels(ds, Rng(1))
        counts = np.bincount(out.labels, minlength=10)
        sigma = np.sqrt(10000 * 0.1 * 0.9)
        assert np.all(np.abs(counts - 1000) < 4 * sigma)

    def test_deterministic(self):
        ds = synthetic_clusters(Rng(0), 100, 4, 10, 1.0)
        a = randomize_labels(ds, Rng(5)).labels
        b = randomize_labels(ds, Rng(5)).labels
        assert np.array_equal(a, b)

    def test_inputs_untouched(self):
        ds = synthetic_clusters(Rng(0), 100, 4, 10, 1.0)
        assert randomize_labels(ds, Rng(5)).inputs is ds.inputs


class TestBatchIterator:
    def test_epoch_is_permutation(self):
        ds = synthetic_clusters(Rng(0), 100, 4, 10, 1.0)
        it = BatchIterator(ds, 7, Rng(0, 1))
        seen = []
        for _ in range(15):  # ceil(100/7)
            x, _ = it.next_batch()
            seen.extend(x[:, 0])
        assert sorted(seen) == sorted(ds.inputs[:, 0])

    def test_permutation_depends_only_on_seed_epoch(self):
        ds = synthetic_clusters(Rng(0), 64, 4, 10, 1.0)
        runs = []
        for _ in range(2):
            it = BatchIterator(ds, 16, Rng(9, 1))
            runs.append([it.next_batch()[1].tolist() for _ in range(8)])
        assert runs[0] == runs[1]
