"""Dense array ops and deterministic RNG used by the training kernel.

Arrays are plain row-major numpy ndarrays in float64 by default
(float32 selectable via ``set_dtype`` for throughput experiments; the
finite-difference tests require float64). Every op validates shapes and
surfaces non-finite results as errors instead of propagating them.
"""

import numpy as np

from . import kernels

_DTYPE = np.float64


class ShapeError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    pass


def set_dtype(dtype) -> None:
    """Select float64 (default) or float32 for newly created arrays."""
    global _DTYPE
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float64), np.dtype(np.float32)):
        raise ValueError(f"unsupported dtype {dtype}")
    _DTYPE = dtype.type


def dtype():
    return _DTYPE


def asarray(values) -> np.ndarray:
    return np.ascontiguousarray(values, dtype=_DTYPE)


def check_finite(x, what: str = "tensor") -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"non-finite values in {what}")
    return x


class Rng:
    """Splittable counter-based generator (Philox 4x64).

    The same (seed, stream) pair yields the same values on any platform
    and under any thread count. ``split`` derives independent child
    streams, so per-block workers can draw reproducibly in parallel.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self._gen = np.random.Generator(np.random.Philox(key=[self.seed, self.stream]))

    def split(self, stream: int) -> "Rng":
        return Rng(self.seed, stream)

    def normal(self, shape, scale: float = 1.0) -> np.ndarray:
        return np.ascontiguousarray(self._gen.standard_normal(shape) * scale, dtype=_DTYPE)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


def gaussian_init(rng: Rng, fan_in: int, shape) -> np.ndarray:
    """Gaussian weights with std 1/sqrt(fan_in), keeping activations O(1)."""
    return rng.normal(shape, scale=1.0 / np.sqrt(fan_in))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-d operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dims differ: {a.shape} x {b.shape}")
    out = kernels.matmul(np.ascontiguousarray(a), np.ascontiguousarray(b))
    return check_finite(out, "matmul output")


def add_bias(x: np.ndarray, b: np.ndarray) -> np.ndarray:
    if x.shape[-1] != b.shape[-1] or b.ndim != 1:
        raise ShapeError(f"bias shape {b.shape} does not match {x.shape}")
    return x + b


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Mask g where x <= 0 (subgradient 0 at exactly 0)."""
    if x.shape != g.shape:
        raise ShapeError(f"relu_backward shapes differ: {x.shape} vs {g.shape}")
    return kernels.relu_backward_mask(x, g)


def softmax_xent(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over rows and its gradient wrt logits.

    Gradient is (softmax - onehot) / m; rows are stabilized by max
    subtraction before exponentiation.
    """
    if logits.ndim != 2:
        raise ShapeError(f"logits must be 2-d, got {logits.shape}")
    m, c = logits.shape
    labels = np.asarray(labels)
    if labels.shape != (m,):
        raise ShapeError(f"labels shape {labels.shape} does not match batch {m}")
    if labels.min() < 0 or labels.max() >= c:
        raise ValueError(f"labels out of range [0, {c})")
    probs = kernels.softmax_rows(np.ascontiguousarray(logits))
    rows = np.arange(m)
    # log-prob of the true class, computed from the stabilized softmax;
    # underflow to log(0) is surfaced by the finite check below
    with np.errstate(divide="ignore"):
        loss = float(-np.mean(np.log(probs[rows, labels])))
    grad = probs.copy()
    grad[rows, labels] -= 1.0
    grad /= m
    check_finite(grad, "softmax_xent gradient")
    if not np.isfinite(loss):
        raise NonFiniteError("non-finite softmax_xent loss")
    return loss, grad
