"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py --n 2000 --repeat 3

Prints one line per kernel with the best-of-``repeat`` wall time for each
backend and the speed-up. Results from the two backends are checked to
agree before timing is reported.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from hetfx import _backend, _fallback


def best_time(fn, repeat: int) -> tuple[float, object]:
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(n: int, reps: int, threads: int):
    rng = np.random.default_rng(0)
    x = rng.uniform(size=n)
    U = rng.normal(size=(reps, n))
    V = rng.normal(size=(n, 100))
    cps = np.searchsorted(np.sort(x), np.linspace(0, 1, 100), side="right").astype(np.intp)
    w = rng.normal(size=n)
    c = rng.normal(size=n)
    pts = np.sort(np.r_[np.linspace(-3, 3, 100), w])
    return {
        "gaussian_weights": lambda k: k.gaussian_weights(x, x, 0.1, True, threads),
        "prefix_sup": lambda k: k.prefix_sup(U, V, cps, False, threads),
        "lambda_gap_sup": lambda k: k.lambda_gap_sup(w, c, pts, cps, threads),
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=2000, help="records")
    parser.add_argument("--reps", type=int, default=64, help="bootstrap rows for prefix_sup")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args(argv)

    if not _backend.HAVE_COMPILED:
        print("compiled kernels are not built; nothing to compare")
        return 1
    compiled = _backend.get("compiled")
    threads = _backend.resolve_threads(args.threads)
    print(f"n={args.n} reps={args.reps} threads={threads}")
    print(f"{'kernel':<18}{'compiled s':>12}{'python s':>12}{'speed-up':>10}")
    for name, fn in cases(args.n, args.reps, threads).items():
        tc, a = best_time(lambda: fn(compiled), args.repeat)
        tp, b = best_time(lambda: fn(_fallback), args.repeat)
        if not np.allclose(a, b, rtol=1e-10):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<18}{tc:>12.4f}{tp:>12.4f}{tp / tc:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
