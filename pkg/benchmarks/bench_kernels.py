"""Compare the numba and numpy kernel backends.

The backend is fixed at import time by LOCALPAR_KERNELS, so this script
re-executes itself once per backend and prints a combined table:

    python3 benchmarks/bench_kernels.py
"""

import argparse
import json
import os
import subprocess
import sys
import time

SIZES = [(256, 256, 256), (512, 512, 512), (1024, 1024, 1024), (64, 4096, 64)]


def bench_backend(repeats: int) -> dict:
    import numpy as np

    from localpar import kernels
    from localpar.data import synthetic_clusters
    from localpar.executor import train_sequential
    from localpar.model import NetworkSpec, Scheme
    from localpar.tensor import Rng

    results = {"backend": kernels.BACKEND, "matmul": [], "train": None}
    rng = np.random.default_rng(0)
    for m, k, n in SIZES:
        a = rng.standard_normal((m, k))
        b = rng.standard_normal((k, n))
        kernels.matmul(a, b)  # warm up / compile
        t0 = time.perf_counter()
        for _ in range(repeats):
            kernels.matmul(a, b)
        dt = (time.perf_counter() - t0) / repeats
        gflops = 2 * m * k * n / dt / 1e9
        results["matmul"].append({"shape": f"{m}x{k}x{n}", "seconds": dt,
                                  "gflops": gflops})
    ds = synthetic_clusters(Rng(0), 512, 32, 10, 6.0)
    spec = NetworkSpec(32, 128, 4, 10, Scheme("greedy"))
    train_sequential(spec, ds, "adam", 1e-3, 5, 64, 0)  # warm up
    t0 = time.perf_counter()
    train_sequential(spec, ds, "adam", 1e-3, 50, 64, 0)
    results["train"] = time.perf_counter() - t0
    return results


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--backend", choices=["numba", "numpy"], default=None,
                    help="internal: run a single backend and print JSON")
    args = ap.parse_args()
    if args.backend:
        print(json.dumps(bench_backend(args.repeats)))
        return
    rows = []
    for backend in ("numba", "numpy"):
        env = dict(os.environ, LOCALPAR_KERNELS=backend)
        out = subprocess.run([sys.executable, __file__, "--backend", backend,
                              "--repeats", str(args.repeats)],
                             env=env, capture_output=True, text=True, check=True)
        rows.append(json.loads(out.stdout.strip().splitlines()[-1]))
    print(f"{'shape':>14} {'numba GF/s':>12} {'numpy GF/s':>12} {'speedup':>8}")
    for nb, np_ in zip(rows[0]["matmul"], rows[1]["matmul"]):
        print(f"{nb['shape']:>14} {nb['gflops']:>12.2f} {np_['gflops']:>12.2f} "
              f"{np_['gflops'] / nb['gflops']:>7.2f}x")
    print(f"\n50-step greedy training run: numba {rows[0]['train']:.3f}s, "
          f"numpy {rows[1]['train']:.3f}s")
    print("numba is the deterministic profile (fixed summation order); "
          "numpy delegates to BLAS and is usually faster.")


if __name__ == "__main__":
    main()
