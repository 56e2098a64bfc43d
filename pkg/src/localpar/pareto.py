"""Sweeps over (batch size x learning rate x scheme) and Pareto frontiers.

A run is scored at a metric cutoff by the first logged step that crosses
it (no interpolation); cost and time at that step come from the FLOPs
model, so every frontier point can be re-derived from its RunRecord.
"""

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

from . import flopsmodel
from .data import Dataset
from .executor import TrainingDiverged, train_sequential
from .model import NetworkSpec, Scheme


@dataclass
class RunRecord:
    scheme: str
    batch_size: int
    optimizer: str
    lr: float
    seed: int
    metric: str                      # train_loss / train_acc / valid_loss / valid_acc
    history: list = field(default_factory=list)   # (step, examples_seen, value)
    diverged: bool = False

    def __post_init__(self):
        steps = [h[0] for h in self.history]
        if steps != sorted(set(steps)):
            raise ValueError("history steps must be strictly increasing")


@dataclass(frozen=True)
class ParetoPoint:
    cost: float
    time: float
    scheme: str
    batch_size: int
    lr: float
    seed: int
    cutoff: float
    steps: int


def steps_to_cutoff(record: RunRecord, cutoff: float, direction: str):
    """First logged step crossing the cutoff; None if never crossed.

    direction 'le' for losses (value <= cutoff), 'ge' for accuracies.
    """
    if direction not in ("le", "ge"):
        raise ValueError("direction must be 'le' or 'ge'")
    for step, _, value in record.history:
        if (value <= cutoff) if direction == "le" else (value >= cutoff):
            return step
    return None


def pareto_frontier(points):
    """Subset of points not strictly dominated in (cost, time), sorted by time.

    A point is dominated if another has cost <= and time <= with at
    least one strict inequality. Exact duplicates are all retained.
    """
    def dominated(p, by):
        return (by.cost <= p.cost and by.time <= p.time
                and (by.cost < p.cost or by.time < p.time))

    keep = [p for p in points if not any(dominated(p, q) for q in points)]
    return sorted(keep, key=lambda p: (p.time, p.cost))


@dataclass
class SweepConfig:
    model_spec: dict                 # input_dim, hidden, depth, classes
    schemes: list[str]
    batch_sizes: list[int]
    optimizer: str = "adam"
    learning_rates: list[float] = None
    seeds: list[int] = field(default_factory=lambda: [0])
    example_budget: int = 200_000
    metric: str = "train_loss"
    eval_points: int = 200

    def __post_init__(self):
        if self.learning_rates is None:
            import numpy as np
            self.learning_rates = list(np.logspace(-4, np.log10(3e-2), 6))


def _run_cell(cfg: SweepConfig, dataset: Dataset, scheme_s, batch, lr, seed):
    ms = cfg.model_spec
    spec = NetworkSpec(input_dim=ms["input_dim"], hidden=ms["hidden"],
                       depth=ms["depth"], classes=ms["classes"],
                       scheme=Scheme.parse(scheme_s))
    steps = max(1, cfg.example_budget // batch)
    eval_every = max(1, steps // cfg.eval_points)
    record = RunRecord(scheme=scheme_s, batch_size=batch, optimizer=cfg.optimizer,
                       lr=lr, seed=seed, metric=cfg.metric)
    try:
        log, _ = train_sequential(spec, dataset, cfg.optimizer, lr, steps, batch,
                                  seed, eval_every=eval_every)
        record.history = log.eval_history(cfg.metric)
    except TrainingDiverged:
        record.diverged = True
    return record


def run_sweep(cfg: SweepConfig, dataset: Dataset, jobs: int = 1) -> list[RunRecord]:
    """Train every grid cell; diverged cells are recorded, not fatal.

    Results are ordered by cell key, never by completion order.
    """
    cells = [(s, b, lr, seed)
             for s in cfg.schemes for b in cfg.batch_sizes
             for lr in cfg.learning_rates for seed in cfg.seeds]
    if jobs <= 1:
        return [_run_cell(cfg, dataset, *cell) for cell in cells]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_run_cell, cfg, dataset, *cell) for cell in cells]
        return [f.result() for f in futures]


def _scheme_cost(constants, scheme_s, batch, steps):
    return flopsmodel.method_cost_for_scheme(constants, Scheme.parse(scheme_s),
                                             batch, steps)


def frontier_at_cutoff(records, constants, cutoff: float, direction: str):
    """Score each record at the cutoff and return the Pareto frontier."""
    points = []
    for rec in records:
        if rec.diverged:
            continue
        step = steps_to_cutoff(rec, cutoff, direction)
        if step is None:
            continue
        mc = _scheme_cost(constants, rec.scheme, rec.batch_size, step + 1)
        points.append(ParetoPoint(cost=mc.cost, time=mc.time, scheme=rec.scheme,
                                  batch_size=rec.batch_size, lr=rec.lr,
                                  seed=rec.seed, cutoff=cutoff, steps=step + 1))
    return pareto_frontier(points)


def write_records_jsonl(records, path):
    with open(path, "w") as f:
        for rec in records:
            f.write(json.dumps(asdict(rec)) + "\n")


def read_records_jsonl(path):
    records = []
    with open(path) as f:
        for line in f:
            d = json.loads(line)
            d["history"] = [tuple(h) for h in d["history"]]
            records.append(RunRecord(**d))
    return records


FRONTIER_COLUMNS = ["cutoff", "scheme", "batch", "lr", "seed",
                    "cost_flops", "time_flops", "steps"]


def write_frontier_csv(frontiers, path):
    """frontiers: iterable of ParetoPoint (possibly across cutoffs)."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(FRONTIER_COLUMNS)
        for p in frontiers:
            w.writerow([p.cutoff, p.scheme, p.batch_size, p.lr, p.seed,
                        repr(p.cost), repr(p.time), p.steps])
