import numpy as np
import pytest

from localpar.tensor import Rng


@pytest.fixture
def rng():
    return Rng(1234)


def naive_matmul(a, b):
    """Independent triple-loop reference, kept free of the kernel code."""
    m, k = a.shape
    k2, n = b.shape
    assert k == k2
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for p in range(k):
                acc += a[i, p] * b[p, j]
            out[i, j] = acc
    return out


def central_difference_grads(loss_fn, params, names, h=1e-5):
    """Finite-difference gradient of loss_fn(params) for each named tensor."""
    grads = {}
    for name in names:
        base = params[name]
        g = np.zeros_like(base)
        flat = base.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss_fn(params)
            flat[i] = orig - h
            down = loss_fn(params)
            flat[i] = orig
            gflat[i] = (up - down) / (2 * h)
        grads[name] = g
    return grads
