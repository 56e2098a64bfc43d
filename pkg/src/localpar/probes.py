"""Diagnostics: gradient-angle profiles, chunk-size ablation, random-label
capacity, and first-layer weight dumps."""

import csv
from dataclasses import dataclass

import numpy as np

from . import model
from .data import Dataset, randomize_labels, train_test_split
from .executor import train_sequential
from .model import NetworkSpec, Scheme
from .tensor import Rng

UNDEFINED_COSINE = "undefined"  # sentinel for zero-norm gradients


def _flatten_layer(grads, i):
    return np.concatenate([grads[f"layer{i}.W"].ravel(), grads[f"layer{i}.b"].ravel()])


def gradient_cosine_profile(spec: NetworkSpec, params, x, labels):
    """Per-layer cosine between full-backprop and greedy local gradients.

    Both gradient sets are evaluated at the same parameters. Zero-norm
    layers report the UNDEFINED_COSINE sentinel so the profile keeps a
    fixed length.
    """
    greedy_spec = NetworkSpec(spec.input_dim, spec.hidden, spec.depth, spec.classes,
                              Scheme("greedy"))
    _, bp_grads = model.full_backprop(greedy_spec, params, x, labels)
    _, local_grads = model.local_step_grads(greedy_spec, params, x, labels)
    profile = []
    for i in range(spec.depth):
        a = _flatten_layer(bp_grads, i)
        b = _flatten_layer(local_grads, i)
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        if na == 0.0 or nb == 0.0:
            profile.append(UNDEFINED_COSINE)
        elif np.array_equal(a, b):
            # sqrt rounding would otherwise keep identical vectors off 1.0
            profile.append(1.0)
        else:
            profile.append(float(np.dot(a, b) / (na * nb)))
    return profile


def mean_cosine_profile(spec, params, batch_stream, num_batches: int):
    """Average defined cosines over a stream of (x, labels) batches."""
    sums = np.zeros(spec.depth)
    counts = np.zeros(spec.depth)
    for _ in range(num_batches):
        x, y = next(batch_stream)
        for i, c in enumerate(gradient_cosine_profile(spec, params, x, y)):
            if c != UNDEFINED_COSINE:
                sums[i] += c
                counts[i] += 1
    return [s / n if n else UNDEFINED_COSINE for s, n in zip(sums, counts)]


@dataclass(frozen=True)
class AblationRow:
    chunks: int
    train_loss: float
    train_acc: float
    test_loss: float
    test_acc: float


def chunk_ablation(base: NetworkSpec, chunk_counts, dataset: Dataset, seed: int,
                   opt_name="adam", lr=1e-3, steps=400, batch_size=64,
                   test_fraction=0.2):
    """Train each chunk count to the same budget; report train/test metrics."""
    train_ds, test_ds = train_test_split(dataset, test_fraction, Rng(seed, stream=7))
    rows = []
    for j in chunk_counts:
        spec = NetworkSpec(base.input_dim, base.hidden, base.depth, base.classes,
                           Scheme("chunked", j))
        _, params = train_sequential(spec, train_ds, opt_name, lr, steps,
                                     batch_size, seed)
        tr_loss, tr_acc = model.evaluate(spec, params, train_ds.inputs, train_ds.labels)
        te_loss, te_acc = model.evaluate(spec, params, test_ds.inputs, test_ds.labels)
        rows.append(AblationRow(j, tr_loss, tr_acc, te_loss, te_acc))
    return rows


def random_label_capacity(base: NetworkSpec, dataset: Dataset, seed: int,
                          schemes=("backprop", "greedy"), opt_name="adam",
                          lr=1e-3, steps=400, batch_size=64, eval_every=25):
    """Memorization curves (train accuracy vs step) on randomized labels."""
    shuffled = randomize_labels(dataset, Rng(seed, stream=11))
    curves = {}
    for scheme_s in schemes:
        spec = NetworkSpec(base.input_dim, base.hidden, base.depth, base.classes,
                           Scheme.parse(scheme_s))
        log, _ = train_sequential(spec, shuffled, opt_name, lr, steps, batch_size,
                                  seed, eval_every=eval_every)
        curves[scheme_s] = log.eval_history("train_acc")
    return curves


def normalize_rows_minmax(w: np.ndarray) -> np.ndarray:
    """Min-max per row; constant rows map to 0.5 by convention."""
    lo = w.min(axis=1, keepdims=True)
    hi = w.max(axis=1, keepdims=True)
    span = hi - lo
    out = np.where(span == 0.0, 0.5, (w - lo) / np.where(span == 0.0, 1.0, span))
    return out


def dump_first_layer(params, path, max_rows: int | None = None):
    """Write min-max-normalized first-layer weight rows as a CSV grid.

    Rows are output units (dense analogs of first-layer filters),
    columns input features.
    """
    w = params["layer0.W"].T  # one row per output unit
    if max_rows is not None:
        w = w[:max_rows]
    norm = normalize_rows_minmax(w)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        for row in norm:
            writer.writerow([repr(float(v)) for v in row])
    return norm


def load_filter_csv(path) -> np.ndarray:
    with open(path, newline="") as f:
        return np.array([[float(v) for v in row] for row in csv.reader(f)])
