"""Time the compiled kernels against their numpy / pure-Python counterparts.

    python benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

Both paths are importable in one process, so the env flag is not needed
here. Compilation happens in a warm-up call that is not timed. The network
simplex has no vectorized form; its reference is the same algorithm run
uncompiled, on a smaller instance.
"""
import argparse
import time

import numpy as np

from otgeodesic import _kernels


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(scale, rng):
    n = int(2000 * scale)
    X, Y = rng.normal(size=(n, 16)), rng.normal(size=(n, 16))
    yield "sqdist", f"{n}x{n}, d=16", lambda: _kernels.sqdist_numba(X, Y), lambda: _kernels.sqdist_numpy(X, Y)

    m = int(400 * scale)
    C = ((rng.normal(size=(m, 1, 2)) - rng.normal(size=(1, m, 2))) ** 2).sum(-1)
    lu = np.full(m, -np.log(m))
    eps = 0.05 * C.mean()
    yield (
        "log_sinkhorn",
        f"{m}x{m}, 200 sweeps",
        lambda: _kernels.log_sinkhorn_numba(C, lu, lu, eps, 200, 0.0),
        lambda: _kernels.log_sinkhorn_numpy(C, lu, lu, eps, 200, 0.0),
    )

    k = int(60 * scale)
    Ck = rng.uniform(size=(k, k))
    ones = np.full(k, float(k))
    yield (
        "transport_simplex",
        f"{k}x{k}",
        lambda: _kernels.transport_simplex_numba(Ck, ones, ones, 10**7),
        lambda: _kernels.transport_simplex_python(Ck, ones, ones, 10**7),
    )

    q, f = int(3000 * scale), int(500 * scale)
    D = rng.uniform(size=(q, f))
    labels = rng.integers(0, 10, f)
    yield (
        "knn_vote",
        f"{q} queries, {f} points, k=5",
        lambda: _kernels.knn_vote_numba(D, labels, 5, 10),
        lambda: _kernels.knn_vote_numpy(D, labels, 5, 10),
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0, help="multiply every problem size")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<18} {'size':<28} {'numba ms':>10} {'reference ms':>13} {'speedup':>8}")
    for name, size, fast, slow in cases(args.scale, rng):
        tf = best_of(fast, args.repeat)
        ts = best_of(slow, 1 if name == "transport_simplex" else args.repeat)
        print(f"{name:<18} {size:<28} {tf * 1e3:>10.2f} {ts * 1e3:>13.2f} {ts / tf:>7.1f}x")


if __name__ == "__main__":
    main()
