"""Throughput of the compiled kernels against the pure-Python fallback.

Runs each kernel for a fixed number of interactions on both backends, checks
that the final populations agree, and prints interactions per second.

    python benchmarks/bench_kernels.py [--n 256] [--steps 200000]
"""
import argparse
import time

import numpy as np

from poplead import kernels
from poplead.engine import make_rng
from poplead.experiments import InitKind, generate_initial
from poplead.protocols import POptParams, encode_popt


def _cases(n, seed):
    rng = make_rng(seed)
    p = POptParams.for_population(n)
    popt = encode_popt(generate_initial(InitKind.UNIFORM_RANDOM, p, rng))
    qe = np.zeros((n, 3), dtype=np.int64)
    qe[:, 0] = 1
    return {
        "popt": (lambda a, k: kernels.run_popt(a, p, seed, k, kernels.STOP_NONE), popt),
        "epidemic": (lambda a, k: kernels.run_epidemic(a, seed, k),
                     rng.integers(0, 1000, n).astype(np.int64)),
        "chvp": (lambda a, k: kernels.run_chvp(a, -1, seed, k),
                 np.full(n, 10**9, dtype=np.int64)),
        "qe": (lambda a, k: kernels.run_qe(a, 2 * n, seed, k), qe),
        "twostate": (lambda a, k: kernels.run_twostate(a, seed, k),
                     np.ones(n, dtype=np.int64)),
    }


def _time(fn, arr, steps):
    a = arr.copy()
    t0 = time.perf_counter()
    used = fn(a, steps)[0]
    return used / (time.perf_counter() - t0), a


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    prev = kernels.BACKEND
    if prev != "cython":
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    print("kernel,python_steps_per_s,cython_steps_per_s,speedup,agree")
    for name, (fn, arr) in _cases(args.n, args.seed).items():
        try:
            kernels.use_backend("python")
            r_py, out_py = _time(fn, arr, args.steps)
        finally:
            kernels.use_backend(prev)
        r_c, out_c = _time(fn, arr, args.steps)
        agree = bool(np.array_equal(out_py, out_c))
        print(f"{name},{r_py:.4g},{r_c:.4g},{r_c / r_py:.1f},{agree}", flush=True)


if __name__ == "__main__":
    main()
