"""SGD with momentum and Adam, applied to named parameter maps."""

import numpy as np


class Optimizer:
    def step(self, params: dict, grads: dict) -> None:
        raise NotImplementedError

    def slots(self) -> dict:
        """Optimizer state for checkpoint inclusion."""
        raise NotImplementedError


class SGDM(Optimizer):
    """Classic momentum: v <- beta*v + g; p <- p - lr*v."""

    def __init__(self, lr: float, momentum: float = 0.9):
        self.lr = lr
        self.momentum = momentum
        self.velocity: dict[str, np.ndarray] = {}

    def step(self, params, grads):
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient for {name}")
            v = self.velocity.get(name)
            if v is None:
                v = np.zeros_like(params[name])
            v = self.momentum * v + g
            self.velocity[name] = v
            params[name] = params[name] - self.lr * v

    def slots(self):
        return {f"velocity/{k}": v for k, v in self.velocity.items()}


class Adam(Optimizer):
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t: dict[str, int] = {}

    def step(self, params, grads):
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient for {name}")
            t = self.t.get(name, 0) + 1
            m = self.beta1 * self.m.get(name, 0.0) + (1.0 - self.beta1) * g
            v = self.beta2 * self.v.get(name, 0.0) + (1.0 - self.beta2) * g * g
            self.t[name] = t
            self.m[name] = m
            self.v[name] = v
            m_hat = m / (1.0 - self.beta1 ** t)
            v_hat = v / (1.0 - self.beta2 ** t)
            params[name] = params[name] - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def slots(self):
        out = {}
        for k in self.m:
            out[f"m/{k}"] = self.m[k]
            out[f"v/{k}"] = self.v[k]
        return out


def make_optimizer(name: str, lr: float, momentum: float = 0.9) -> Optimizer:
    if name == "sgdm":
        return SGDM(lr, momentum)
    if name == "adam":
        return Adam(lr)
    raise ValueError(f"unknown optimizer {name!r}")


# FLOPs charged per optimizer step, as a multiple of the parameter count.
OPTIMIZER_FLOPS_PER_PARAM = 10


def lr_grid(num: int = 6, lo: float = 1e-4, hi: float = 3e-2) -> list[float]:
    """Log-spaced learning-rate grid used by the sweeps."""
    return list(np.logspace(np.log10(lo), np.log10(hi), num))
