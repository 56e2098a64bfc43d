"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The backend is chosen once at import time from the ``LOCALPAR_KERNELS``
environment variable: ``numba`` (default when numba imports cleanly) or
``numpy``. The numba kernels are plain nested loops compiled without
fastmath, so their summation order is fixed; the numpy path delegates
matmul to BLAS, which is faster but may reassociate sums. Both backends
are internally deterministic, so bit-level equality claims hold within
either backend.
"""

import os

import numpy as np

_requested = os.environ.get("LOCALPAR_KERNELS", "").strip().lower()

if _requested not in ("", "numba", "numpy"):
    raise ValueError(f"LOCALPAR_KERNELS must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numpy":
    _use_numba = False
else:
    try:
        import numba

        _use_numba = True
    except ImportError:
        if _requested == "numba":
            raise
        _use_numba = False

BACKEND = "numba" if _use_numba else "numpy"


def _np_matmul(a, b):
    return a @ b


def _np_relu_backward(x, g):
    return np.where(x > 0.0, g, np.zeros((), dtype=g.dtype))


def _np_softmax_rows(z):
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


if _use_numba:
    from numba import njit

    @njit(cache=True, nogil=True)
    def _nb_matmul(a, b):
        m, k = a.shape
        k2, n = b.shape
        out = np.zeros((m, n), dtype=a.dtype)
        # i-k-j order: the inner j loop is elementwise, so SIMD does not
        # reassociate the k-summation.
        for i in range(m):
            for p in range(k):
                aip = a[i, p]
                for j in range(n):
                    out[i, j] += aip * b[p, j]
        return out

    @njit(cache=True, nogil=True)
    def _nb_relu_backward(x, g):
        out = np.zeros_like(g)
        flat_x = x.ravel()
        flat_g = g.ravel()
        flat_o = out.ravel()
        for i in range(flat_x.size):
            if flat_x[i] > 0.0:
                flat_o[i] = flat_g[i]
        return out

    @njit(cache=True, nogil=True)
    def _nb_softmax_rows(z):
        m, c = z.shape
        out = np.empty_like(z)
        for i in range(m):
            hi = z[i, 0]
            for j in range(1, c):
                if z[i, j] > hi:
                    hi = z[i, j]
            total = 0.0
            for j in range(c):
                e = np.exp(z[i, j] - hi)
                out[i, j] = e
                total += e
            for j in range(c):
                out[i, j] /= total
        return out

    matmul = _nb_matmul
    relu_backward_mask = _nb_relu_backward
    softmax_rows = _nb_softmax_rows
else:
    matmul = _np_matmul
    relu_backward_mask = _np_relu_backward
    softmax_rows = _np_softmax_rows
