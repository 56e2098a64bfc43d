"""Training engines.

``train_sequential`` is the reference semantics for every scheme: one
canonical forward per minibatch, per-block local backwards, one update.

``train_pipelined`` runs one worker per block. In lockstep mode the
round structure is fixed: at round t, block j processes minibatch t-j,
so a run is bit-reproducible for any worker-pool size. The defining
sequential semantics is ``train_staged_sequential`` (same round loop,
blocks processed last-to-first, one in-flight message per boundary);
lockstep must match it bit for bit. Async mode connects free-running
workers with bounded queues and is only statistically reproducible.

TrainLog wallclock fields are physical measurements and are excluded
from determinism comparisons (``TrainLog.core``).
"""

import csv
import json
import queue
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import model, optim
from .data import BatchIterator, Dataset
from .model import NetworkSpec
from .tensor import Rng


class TrainingDiverged(RuntimeError):
    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log


@dataclass
class StageMessage:
    minibatch_id: int
    activations: np.ndarray
    labels: np.ndarray
    producer_version: int = 0  # producer's update count when the forward ran


@dataclass
class TrainLog:
    # one row per (step, block): local loss, plus global metrics on eval steps
    records: list[dict] = field(default_factory=list)

    def add(self, step, block, local_loss, examples_seen, wallclock_ms,
            global_loss=None, global_acc=None):
        self.records.append({
            "step": step, "block": block, "local_loss": local_loss,
            "global_loss": global_loss, "global_acc": global_acc,
            "examples_seen": examples_seen, "wallclock_ms": wallclock_ms,
        })

    def core(self):
        """Deterministic view: everything except wallclock."""
        return [{k: v for k, v in r.items() if k != "wallclock_ms"}
                for r in sorted(self.records, key=lambda r: (r["step"], r["block"]))]

    def eval_history(self, metric: str):
        """(step, examples_seen, value) rows for a global metric."""
        key = {"train_loss": "global_loss", "train_acc": "global_acc"}[metric]
        return [(r["step"], r["examples_seen"], r[key])
                for r in sorted(self.records, key=lambda r: r["step"])
                if r[key] is not None]

    def final_eval(self, metric: str):
        hist = self.eval_history(metric)
        return hist[-1][2] if hist else None

    COLUMNS = ["step", "block", "local_loss", "global_loss", "global_acc",
               "examples_seen", "wallclock_ms"]

    def write_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=self.COLUMNS)
            w.writeheader()
            w.writerows(self.records)

    def write_jsonl(self, path):
        with open(path, "w") as f:
            for r in self.records:
                f.write(json.dumps(r) + "\n")


def _make_optimizer(opt_name, lr, momentum):
    return optim.make_optimizer(opt_name, lr, momentum)


def train_sequential(spec: NetworkSpec, dataset: Dataset, opt_name: str, lr: float,
                     steps: int, batch_size: int, seed: int, eval_every: int = 50,
                     momentum: float = 0.9, params=None, eval_dataset=None):
    """Reference trainer; returns (TrainLog, params)."""
    rng = Rng(seed)
    if params is None:
        params = model.init_params(spec, rng.split(0))
    batches = BatchIterator(dataset, batch_size, rng.split(1))
    optimizer = _make_optimizer(opt_name, lr, momentum)
    eval_ds = eval_dataset or dataset
    log = TrainLog()
    t0 = time.perf_counter()
    for step in range(steps):
        x, y = batches.next_batch()
        try:
            block_losses, grads = model.local_step_grads(spec, params, x, y)
            optimizer.step(params, grads)
        except FloatingPointError as e:
            raise TrainingDiverged(f"step {step}: {e}", log) from e
        examples = (step + 1) * batch_size
        ms = (time.perf_counter() - t0) * 1e3
        do_eval = (step + 1) % eval_every == 0 or step == steps - 1
        gl, ga = model.evaluate(spec, params, eval_ds.inputs, eval_ds.labels) \
            if do_eval else (None, None)
        for j, loss in block_losses.items():
            log.add(step, j, loss, examples, ms,
                    gl if j == len(spec.blocks) - 1 else None,
                    ga if j == len(spec.blocks) - 1 else None)
    return log, params


def _check_pipeline_scheme(spec: NetworkSpec):
    if spec.scheme.kind not in ("greedy", "chunked"):
        raise ValueError("pipelined execution supports greedy and chunked schemes")
    if len(spec.blocks) < 2:
        raise ValueError("pipelined execution needs at least 2 blocks")


class _BlockWorker:
    """Owns one block's optimizer state and update counter."""

    def __init__(self, spec, block_index, opt_name, lr, momentum):
        self.spec = spec
        self.index = block_index
        self.block = spec.blocks[block_index]
        self.optimizer = _make_optimizer(opt_name, lr, momentum)
        self.version = 0

    def process(self, params, msg: StageMessage):
        version_used = self.version
        out, caches = model.block_forward(self.spec, self.block, params, msg.activations)
        loss, grads = model.block_local_backward(self.spec, self.block, params,
                                                 caches, msg.labels)
        self.optimizer.step(params, grads)
        self.version += 1
        out_msg = StageMessage(msg.minibatch_id, out, msg.labels, version_used)
        return loss, out_msg, version_used


def _run_lockstep(spec, dataset, opt_name, lr, steps, batch_size, seed, eval_every,
                  momentum, pool_size, staleness_probe=None):
    rng = Rng(seed)
    params = model.init_params(spec, rng.split(0))
    batches = BatchIterator(dataset, batch_size, rng.split(1))
    workers = [_BlockWorker(spec, j, opt_name, lr, momentum)
               for j in range(len(spec.blocks))]
    J = len(workers)
    inflight: list[StageMessage | None] = [None] * J
    log = TrainLog()
    t0 = time.perf_counter()
    pool = ThreadPoolExecutor(max_workers=pool_size) if pool_size else None
    try:
        for rnd in range(steps + J - 1):
            if rnd < steps:
                x, y = batches.next_batch()
                inflight[0] = StageMessage(rnd, x, y, 0)
            active = [j for j in range(J) if inflight[j] is not None]
            if pool is None:
                # staged sequential reference: last block to first
                results = {}
                for j in reversed(active):
                    results[j] = workers[j].process(params, inflight[j])
            else:
                futures = {j: pool.submit(workers[j].process, params, inflight[j])
                           for j in active}
                results = {j: f.result() for j, f in futures.items()}
            next_inflight: list[StageMessage | None] = [None] * J
            for j in active:
                loss, out_msg, version_used = results[j]
                msg = inflight[j]
                if staleness_probe is not None:
                    staleness_probe(j, msg.minibatch_id, msg.producer_version, rnd)
                if j + 1 < J:
                    next_inflight[j + 1] = out_msg  # final block's output is dropped
            inflight = next_inflight
            ms = (time.perf_counter() - t0) * 1e3
            last_mb = rnd - (J - 1)
            do_eval = last_mb >= 0 and ((last_mb + 1) % eval_every == 0
                                        or last_mb == steps - 1)
            gl, ga = model.evaluate(spec, params, dataset.inputs, dataset.labels) \
                if do_eval else (None, None)
            for j in active:
                mb = results[j][1].minibatch_id
                examples = (mb + 1) * batch_size
                is_last = j == J - 1
                log.add(mb, j, results[j][0], examples, ms,
                        gl if is_last else None, ga if is_last else None)
    finally:
        if pool is not None:
            pool.shutdown()
    return log, params


def train_staged_sequential(spec, dataset, opt_name, lr, steps, batch_size, seed,
                            eval_every: int = 50, momentum: float = 0.9):
    """Single-threaded reference defining lockstep pipeline semantics."""
    _check_pipeline_scheme(spec)
    return _run_lockstep(spec, dataset, opt_name, lr, steps, batch_size, seed,
                         eval_every, momentum, pool_size=None)


def train_pipelined(spec, dataset, opt_name, lr, steps, batch_size, seed,
                    mode: str = "lockstep", jobs: int | None = None,
                    eval_every: int = 50, momentum: float = 0.9,
                    queue_capacity: int = 2, staleness_probe=None):
    _check_pipeline_scheme(spec)
    if mode == "lockstep":
        return _run_lockstep(spec, dataset, opt_name, lr, steps, batch_size, seed,
                             eval_every, momentum,
                             pool_size=jobs or len(spec.blocks),
                             staleness_probe=staleness_probe)
    if mode != "async":
        raise ValueError(f"unknown mode {mode!r}")
    return _run_async(spec, dataset, opt_name, lr, steps, batch_size, seed,
                      momentum, queue_capacity)


def _run_async(spec, dataset, opt_name, lr, steps, batch_size, seed, momentum,
               queue_capacity):
    rng = Rng(seed)
    params = model.init_params(spec, rng.split(0))
    batches = BatchIterator(dataset, batch_size, rng.split(1))
    J = len(spec.blocks)
    # terminal queue unbounded: the controller drains it only after feeding
    # all inputs, so backpressure there would deadlock the pipeline
    queues = [queue.Queue(maxsize=queue_capacity) for _ in range(J)] + [queue.Queue()]
    workers = [_BlockWorker(spec, j, opt_name, lr, momentum) for j in range(J)]
    per_block_logs: list[list] = [[] for _ in range(J)]
    errors: list[BaseException] = []

    def run_worker(j):
        try:
            while True:
                msg = queues[j].get()
                if msg is None:
                    queues[j + 1].put(None)
                    return
                loss, out_msg, _ = workers[j].process(params, msg)
                per_block_logs[j].append((msg.minibatch_id, loss))
                queues[j + 1].put(out_msg)
        except BaseException as e:  # orderly shutdown with partial logs
            errors.append(e)
            queues[j + 1].put(None)

    threads = [threading.Thread(target=run_worker, args=(j,), daemon=True)
               for j in range(J)]
    t0 = time.perf_counter()
    for th in threads:
        th.start()
    for step in range(steps):
        x, y = batches.next_batch()
        queues[0].put(StageMessage(step, x, y, 0))
    queues[0].put(None)
    while queues[J].get() is not None:
        pass
    for th in threads:
        th.join()
    elapsed_ms = (time.perf_counter() - t0) * 1e3
    if errors:
        raise TrainingDiverged(f"async worker failed: {errors[0]}")
    log = TrainLog()
    gl, ga = model.evaluate(spec, params, dataset.inputs, dataset.labels)
    for j in range(J):
        for mb, loss in sorted(per_block_logs[j]):
            is_final = j == J - 1 and mb == steps - 1
            log.add(mb, j, loss, (mb + 1) * batch_size, elapsed_ms,
                    gl if is_final else None, ga if is_final else None)
    return log, params
