"""Event-schedule simulator for an abstract multi-stage pipeline.

Two modes are compared on the same stage description:

* ``pipelined_backprop``: a minibatch of M microbatches flows forward
  through all D stages; backward passes flow in reverse once a stage has
  forwarded every microbatch (activation recomputation semantics, which
  is also what makes a stage's input live until its backward). Gradients
  accumulate and apply at minibatch end, giving the ramp-up / steady /
  ramp-down phases.
* ``chunked_local``: after a D-1 step fill, every stage runs
  forward + aux + local backward each step indefinitely; nothing flows
  upstream.

Time is abstract cycles; communication is volume-only (zero latency).
"""

from dataclasses import dataclass, field


def _as_list(value, n, name):
    vals = [float(value)] * n if isinstance(value, (int, float)) else [float(v) for v in value]
    if len(vals) != n:
        raise ValueError(f"{name} must have length {n}")
    return vals


@dataclass
class PipelineConfig:
    num_stages: int
    forward_cycles: list | float = 1.0
    backward_cycles: list | float = 1.0
    aux_cycles: list | float = 0.0
    boundary_activation_bytes: list | None = None   # length D-1
    microbatches: int = 1                            # M, backprop only
    mode: str = "pipelined_backprop"                 # or "chunked_local"
    recomputation: bool = True
    parameter_bytes: list | float = 1.0
    aux_parameter_bytes: list | float = 0.0
    input_bytes_per_microbatch: list | float = 1.0
    stage_activation_bytes: list | float = 1.0       # per live microbatch, stored

    def __post_init__(self):
        D = self.num_stages
        if D < 1:
            raise ValueError("num_stages must be >= 1")
        if self.microbatches < 1:
            raise ValueError("microbatches must be >= 1")
        if self.mode not in ("pipelined_backprop", "chunked_local"):
            raise ValueError(f"unknown mode {self.mode!r}")
        self.forward_cycles = _as_list(self.forward_cycles, D, "forward_cycles")
        self.backward_cycles = _as_list(self.backward_cycles, D, "backward_cycles")
        self.aux_cycles = _as_list(self.aux_cycles, D, "aux_cycles")
        if self.boundary_activation_bytes is None:
            self.boundary_activation_bytes = [1.0] * (D - 1)
        self.boundary_activation_bytes = _as_list(self.boundary_activation_bytes,
                                                  D - 1, "boundary_activation_bytes")
        self.parameter_bytes = _as_list(self.parameter_bytes, D, "parameter_bytes")
        self.aux_parameter_bytes = _as_list(self.aux_parameter_bytes, D,
                                            "aux_parameter_bytes")
        self.input_bytes_per_microbatch = _as_list(self.input_bytes_per_microbatch,
                                                   D, "input_bytes_per_microbatch")
        self.stage_activation_bytes = _as_list(self.stage_activation_bytes, D,
                                               "stage_activation_bytes")
        if any(f <= 0 for f in self.forward_cycles) or \
           any(b <= 0 for b in self.backward_cycles) or \
           any(a < 0 for a in self.aux_cycles):
            raise ValueError("cycle counts must be positive (aux may be zero)")


@dataclass
class TraceEvent:
    time: float
    duration: float
    stage: int
    kind: str        # fwd / bwd / aux
    item: int        # microbatch or minibatch id


@dataclass
class SimReport:
    total_cycles: float
    busy_cycles: list
    utilization: list
    mean_utilization: float
    received_bytes: list
    transmitted_bytes: list
    memory_bytes: list
    live_microbatches: list
    throughput_whole: float          # items per cycle over the whole run
    steady_state_fraction: float
    events: list = field(default_factory=list)

    def to_dict(self):
        d = {k: v for k, v in self.__dict__.items() if k != "events"}
        return d


def _simulate_backprop(cfg: PipelineConfig, minibatches: int, keep_trace: bool):
    D, M = cfg.num_stages, cfg.microbatches
    f, b, aux = cfg.forward_cycles, cfg.backward_cycles, cfg.aux_cycles
    free = [0.0] * D
    busy = [0.0] * D
    events = []
    live_peak = [0] * D
    for mb in range(minibatches):
        fwd_start = [[0.0] * M for _ in range(D)]
        fwd_end = [[0.0] * M for _ in range(D)]
        bwd_end = [[0.0] * M for _ in range(D)]
        for t in range(M):
            for s in range(D):
                dur = f[s] + (aux[s] if s == D - 1 else 0.0)
                ready = fwd_end[s - 1][t] if s > 0 else 0.0
                start = max(free[s], ready)
                fwd_start[s][t] = start
                fwd_end[s][t] = start + dur
                free[s] = fwd_end[s][t]
                busy[s] += dur
                if keep_trace:
                    events.append(TraceEvent(start, dur, s, "fwd", t))
        # backward drains in reverse microbatch order; a stage backwards
        # only after all its forwards (inputs held live until then)
        for t in reversed(range(M)):
            for s in reversed(range(D)):
                ready = bwd_end[s + 1][t] if s < D - 1 else fwd_end[s][t]
                start = max(free[s], ready)
                bwd_end[s][t] = start + b[s]
                free[s] = bwd_end[s][t]
                busy[s] += b[s]
                if keep_trace:
                    events.append(TraceEvent(start, b[s], s, "bwd", t))
        # live count: microbatches resident between their forward and backward
        for s in range(D):
            times = sorted([(fwd_start[s][t], 1) for t in range(M)]
                           + [(bwd_end[s][t], -1) for t in range(M)])
            cur = peak = 0
            for _, delta in times:
                cur += delta
                peak = max(peak, cur)
            live_peak[s] = max(live_peak[s], peak)
        # gradient application: minibatch barrier per stage
    makespan = max(free)
    return makespan, busy, live_peak, events, minibatches * M


def _simulate_local(cfg: PipelineConfig, steps: int, keep_trace: bool):
    D = cfg.num_stages
    f, b, aux = cfg.forward_cycles, cfg.backward_cycles, cfg.aux_cycles
    free = [0.0] * D
    busy = [0.0] * D
    events = []
    out_time = [0.0] * steps  # predecessor output availability
    for s in range(D):
        prev_out = out_time
        out_time = [0.0] * steps
        for t in range(steps):
            start = max(free[s], prev_out[t] if s > 0 else 0.0)
            out_time[t] = start + f[s]
            dur = f[s] + aux[s] + b[s]
            free[s] = start + dur
            busy[s] += dur
            if keep_trace:
                events.append(TraceEvent(start, f[s], s, "fwd", t))
                if aux[s]:
                    events.append(TraceEvent(start + f[s], aux[s], s, "aux", t))
                events.append(TraceEvent(start + f[s] + aux[s], b[s], s, "bwd", t))
    makespan = max(free)
    return makespan, busy, [1] * D, events, steps


def communication_report(cfg: PipelineConfig, items: int = 1):
    """Per-stage bytes received/transmitted for `items` microbatches.

    Local mode sends activations forward only; backprop additionally
    sends gradient bytes backward, equal in size to the activations at
    the same boundary.
    """
    D = cfg.num_stages
    bnd = cfg.boundary_activation_bytes
    received = [0.0] * D
    transmitted = [0.0] * D
    for s in range(D):
        fwd_in = bnd[s - 1] if s > 0 else 0.0
        fwd_out = bnd[s] if s < D - 1 else 0.0
        received[s] = fwd_in
        transmitted[s] = fwd_out
        if cfg.mode == "pipelined_backprop":
            received[s] += fwd_out      # gradient from downstream
            transmitted[s] += fwd_in    # gradient to upstream
    return ([r * items for r in received], [t * items for t in transmitted])


def memory_report(cfg: PipelineConfig, live_microbatches=None):
    """Per-stage memory estimate in bytes.

    Backprop holds each live microbatch's stage input (plus all stored
    activations when not recomputing); local holds one working set plus
    the auxiliary head parameters.
    """
    D = cfg.num_stages
    if cfg.mode == "chunked_local":
        return [cfg.parameter_bytes[s] + cfg.aux_parameter_bytes[s]
                + cfg.input_bytes_per_microbatch[s] + cfg.stage_activation_bytes[s]
                for s in range(D)]
    if live_microbatches is None:
        _, _, live_microbatches, _, _ = _simulate_backprop(cfg, 1, False)
    per_live = list(cfg.input_bytes_per_microbatch)
    if cfg.recomputation:
        # one working activation set for the microbatch in flight
        extra = list(cfg.stage_activation_bytes)
    else:
        per_live = [p + a for p, a in zip(per_live, cfg.stage_activation_bytes)]
        extra = [0.0] * D
    return [cfg.parameter_bytes[s] + live_microbatches[s] * per_live[s] + extra[s]
            for s in range(D)]


def simulate(cfg: PipelineConfig, items: int | None = None,
             keep_trace: bool = False) -> SimReport:
    """Run the schedule; `items` is minibatches (backprop) or steps (local)."""
    if cfg.mode == "pipelined_backprop":
        makespan, busy, live, events, n_items = _simulate_backprop(
            cfg, items or 1, keep_trace)
    else:
        makespan, busy, live, events, n_items = _simulate_local(
            cfg, items or 100 * cfg.num_stages, keep_trace)
    util = [bs / makespan for bs in busy]
    received, transmitted = communication_report(cfg, n_items)
    memory = memory_report(cfg, live if cfg.mode == "pipelined_backprop" else None)
    return SimReport(
        total_cycles=makespan,
        busy_cycles=busy,
        utilization=util,
        mean_utilization=sum(util) / len(util),
        received_bytes=received,
        transmitted_bytes=transmitted,
        memory_bytes=memory,
        live_microbatches=live,
        throughput_whole=n_items / makespan,
        steady_state_fraction=sum(util) / len(util),
        events=events,
    )


def write_trace_csv(events, path):
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "duration", "stage", "kind", "item"])
        for e in sorted(events, key=lambda e: (e.time, e.stage)):
            w.writerow([repr(e.time), repr(e.duration), e.stage, e.kind, e.item])
