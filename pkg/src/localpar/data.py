"""Dataset loading and synthesis.

Supports the CIFAR-10 binary format (3073-byte records: one label byte
followed by 3072 pixel bytes in R,G,B planes), synthetic Gaussian-cluster
classification data as a desk-scale stand-in, and label randomization for
the capacity probe.
"""

import os
from dataclasses import dataclass

import numpy as np

from .tensor import Rng

CIFAR_RECORD_BYTES = 3073
CIFAR_PIXELS = 3072


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray  # n x d, float, images scaled to [0, 1]
    labels: np.ndarray  # n, int64
    num_classes: int

    def __post_init__(self):
        if self.labels.min(initial=0) < 0 or self.labels.max(initial=0) >= self.num_classes:
            raise ValueError("labels out of range")
        if not np.all(np.isfinite(self.inputs)):
            raise ValueError("non-finite inputs")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


class CifarFormatError(ValueError):
    pass


def load_cifar10_binary(paths, max_records: int | None = None) -> Dataset:
    """Load CIFAR-10 binary batch files, optionally only a record prefix."""
    records = []
    remaining = max_records
    for path in paths:
        if not os.path.exists(path):
            raise FileNotFoundError(path)
        raw = np.fromfile(path, dtype=np.uint8)
        if raw.size % CIFAR_RECORD_BYTES != 0:
            raise CifarFormatError(f"{path}: size {raw.size} not a multiple of {CIFAR_RECORD_BYTES}")
        batch = raw.reshape(-1, CIFAR_RECORD_BYTES)
        if remaining is not None:
            batch = batch[:remaining]
            remaining -= batch.shape[0]
        records.append(batch)
        if remaining == 0:
            break
    if not records:
        raise CifarFormatError("no input files")
    table = np.concatenate(records, axis=0)
    labels = table[:, 0].astype(np.int64)
    if labels.size and labels.max() > 9:
        raise CifarFormatError(f"label byte {labels.max()} > 9")
    inputs = table[:, 1:].astype(np.float64) / 255.0
    return Dataset(inputs=inputs, labels=labels, num_classes=10)


def serialize_cifar10(dataset: Dataset) -> bytes:
    """Inverse of the loader; used for the round-trip check."""
    n = dataset.n
    table = np.empty((n, CIFAR_RECORD_BYTES), dtype=np.uint8)
    table[:, 0] = dataset.labels
    table[:, 1:] = np.round(dataset.inputs * 255.0)
    return table.tobytes()


def standardize(dataset: Dataset) -> Dataset:
    """Optional per-feature standardization (off by default)."""
    mu = dataset.inputs.mean(axis=0)
    sd = dataset.inputs.std(axis=0)
    sd[sd == 0.0] = 1.0
    return Dataset(inputs=(dataset.inputs - mu) / sd, labels=dataset.labels,
                   num_classes=dataset.num_classes)


def synthetic_clusters(rng: Rng, n: int, d: int, num_classes: int,
                       separation: float) -> Dataset:
    """Balanced Gaussian clusters with pairwise mean distance >= separation."""
    if n <= 0 or d <= 0 or num_classes <= 0:
        raise ValueError("n, d, num_classes must be positive")
    means = rng.normal((num_classes, d))
    if num_classes > 1 and separation > 0.0:
        diffs = means[:, None, :] - means[None, :, :]
        dists = np.sqrt((diffs ** 2).sum(axis=2))
        min_dist = dists[np.triu_indices(num_classes, k=1)].min()
        if min_dist == 0.0:
            raise ValueError("degenerate cluster means drawn")
        means *= separation / min_dist
    elif separation == 0.0:
        means[:] = 0.0
    labels = np.arange(n, dtype=np.int64) % num_classes
    inputs = rng.normal((n, d)) + means[labels]
    return Dataset(inputs=inputs, labels=labels, num_classes=num_classes)


def randomize_labels(dataset: Dataset, rng: Rng) -> Dataset:
    labels = rng.integers(0, dataset.num_classes, size=dataset.n).astype(np.int64)
    return Dataset(inputs=dataset.inputs, labels=labels, num_classes=dataset.num_classes)


def train_test_split(dataset: Dataset, test_fraction: float, rng: Rng):
    n_test = int(round(dataset.n * test_fraction))
    perm = rng.permutation(dataset.n)
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    mk = lambda idx: Dataset(inputs=dataset.inputs[idx], labels=dataset.labels[idx],
                             num_classes=dataset.num_classes)
    return mk(train_idx), mk(test_idx)


class BatchIterator:
    """Epoch-shuffled minibatch stream; permutation depends only on (seed, epoch)."""

    def __init__(self, dataset: Dataset, batch_size: int, rng: Rng):
        if batch_size <= 0:
            raise ValueError("batch_size must be positive")
        self.dataset = dataset
        self.batch_size = batch_size
        self.rng = rng
        self.epoch = 0
        self._order = self._permute()
        self._cursor = 0

    def _permute(self) -> np.ndarray:
        # fresh counter-based stream per (seed, stream, epoch); avoids
        # colliding with draws made elsewhere from the same Rng
        key = [self.rng.seed ^ 0x9E3779B97F4A7C15, (self.rng.stream << 20) + self.epoch]
        gen = np.random.Generator(np.random.Philox(key=key))
        return gen.permutation(self.dataset.n)

    def next_batch(self):
        if self._cursor >= self.dataset.n:
            self.epoch += 1
            self._order = self._permute()
            self._cursor = 0
        idx = self._order[self._cursor:self._cursor + self.batch_size]
        self._cursor += self.batch_size
        return self.dataset.inputs[idx], self.dataset.labels[idx]
