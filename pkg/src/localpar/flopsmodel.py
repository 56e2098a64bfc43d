"""FLOPs cost model: per-model constants and per-method cost/time.

Cost is total FLOPs for a run; time ("sequential FLOPs") divides cost by
the maximum exploitable parallelism, i.e. batch size times the number of
concurrently trainable chunks. Constants for the non-MLP models are
published profiler measurements and are kept verbatim in the registry.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class CostModelConstants:
    layers: int
    forward_cost: float          # FLOPs per example per layer, layer-averaged
    aux_cost: float              # FLOPs per example per auxiliary head
    backward_multiplier: float
    parameters: int | None       # None when no published count exists

    def __post_init__(self):
        if min(self.layers, self.forward_cost, self.aux_cost,
               self.backward_multiplier) <= 0:
            raise ValueError("cost constants must be positive")
        if self.parameters is not None and self.parameters <= 0:
            raise ValueError("parameters must be positive")

    @property
    def optimizer_cost(self) -> float:
        """FLOPs per optimizer step: ten per parameter.

        Zero when the parameter count is unknown; the optimizer term is
        negligible next to the per-example terms.
        """
        if self.parameters is None:
            return 0.0
        return 10.0 * self.parameters


@dataclass(frozen=True)
class MethodCost:
    method: str
    cost: float   # total FLOPs
    time: float   # sequential FLOPs

    def __post_init__(self):
        if self.cost <= 0 or self.time <= 0:
            raise ValueError("cost and time must be positive")
        if self.time > self.cost * (1 + 1e-12):
            raise ValueError("time cannot exceed cost")


def mlp_param_count(N: int, L: int, I: int, C: int) -> int:
    """Backbone plus final classifier parameters for an L-layer MLP."""
    first = I * N + N
    hidden = (L - 1) * (N * N + N)
    head = N * C + C
    return first + hidden + head


def mlp_constants(N: int, L: int, I: int = 3072, C: int = 10) -> CostModelConstants:
    """MLP cost constants: matmul + bias + relu forward, linear aux head.

    Matmul of an n-vector into m outputs costs 2*n*m - n FLOPs; relu is
    1 FLOP/entry and softmax 5 FLOPs/class.
    """
    if min(N, L, I, C) <= 0:
        raise ValueError("dimensions must be positive")
    first_layer = (2 * I * N - I) + N + 2 * N
    hidden_layer = (2 * N * N - N) + N + 2 * N
    forward_cost = (first_layer + (L - 1) * hidden_layer) / L
    aux_cost = (2 * N * C - N) + C + 5 * C
    return CostModelConstants(layers=L, forward_cost=float(forward_cost),
                              aux_cost=float(aux_cost), backward_multiplier=1.5,
                              parameters=mlp_param_count(N, L, I, C))


_REGISTRY = {
    "mlp4096": mlp_constants(4096, 8, 3072, 10),
    "resnet18": CostModelConstants(layers=9, forward_cost=1640544.352941176,
                                   aux_cost=565900.6470588235,
                                   backward_multiplier=2.08565879129763,
                                   parameters=13170792),
    "resnet50": CostModelConstants(layers=17, forward_cost=5479411.176470588,
                                   aux_cost=3382457.3529411764,
                                   backward_multiplier=2.0280375672996596,
                                   parameters=38711720),
    "transformer_small": CostModelConstants(layers=4, forward_cost=13837446.0,
                                            aux_cost=1163904.0,
                                            backward_multiplier=1.6581083035860107,
                                            parameters=None),
    "transformer_large": CostModelConstants(layers=6, forward_cost=51037318.0,
                                            aux_cost=4653696.0,
                                            backward_multiplier=1.7526391044859857,
                                            parameters=None),
}


def registry(model_id: str) -> CostModelConstants:
    try:
        return _REGISTRY[model_id]
    except KeyError:
        raise KeyError(f"unknown model {model_id!r}; known: {sorted(_REGISTRY)}") from None


def known_models() -> list[str]:
    return sorted(_REGISTRY)


METHODS = ("backprop", "greedy", "overlapping", "chunked", "last_k")


def method_cost(c: CostModelConstants, method: str, batch_size: int, steps: int,
                k: int | None = None) -> MethodCost:
    """Total and sequential FLOPs for training `steps` steps at `batch_size`.

    `k` is the chunk count for `chunked` and the trainable-layer count
    for `last_k`.
    """
    if batch_size < 1 or steps < 1:
        raise ValueError("batch_size and steps must be >= 1")
    L, fwd, aux, bm = c.layers, c.forward_cost, c.aux_cost, c.backward_multiplier
    step_extra = c.optimizer_cost
    if method == "backprop":
        cpe = (1 + bm) * (fwd * L + aux)
        parallel = 1.0
    elif method == "greedy":
        cpe = (1 + bm) * ((fwd + aux) * L)
        parallel = float(L)
    elif method == "overlapping":
        cpe = ((fwd + aux) * L
               + (L - 1) * bm * (2 * fwd + aux)
               + bm * (fwd + aux))
        step_extra += 2.0 * (c.parameters or 0)  # gradient averaging of shared layers
        parallel = float(L)
    elif method == "chunked":
        if k is None or not 1 <= k <= L:
            raise ValueError(f"chunked needs 1 <= K <= {L}")
        cpe = (1 + bm) * (fwd * L + k * aux)
        parallel = float(k)
    elif method == "last_k":
        if k is None or not 1 <= k <= L:
            raise ValueError(f"last_k needs 1 <= K <= {L}")
        cpe = (L * fwd + aux) + bm * (k * fwd + aux)
        parallel = (L + k * bm) / (k * (1 + bm))
    else:
        raise ValueError(f"unknown method {method!r}")
    cost = cpe * steps * batch_size + steps * step_extra
    time = cost / (batch_size * parallel)
    name = method if k is None else f"{method}:{k}"
    return MethodCost(method=name, cost=cost, time=time)


def method_cost_for_scheme(c: CostModelConstants, scheme, batch_size: int,
                           steps: int) -> MethodCost:
    """method_cost keyed by a model.Scheme instance."""
    kind = scheme.kind
    if kind in ("chunked", "last_k"):
        return method_cost(c, kind, batch_size, steps, k=scheme.param)
    return method_cost(c, kind, batch_size, steps)
