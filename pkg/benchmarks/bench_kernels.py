"""Compare the numba and numpy backends on the angular kernels and one end-to-end check.

Run with ``python3 benchmarks/bench_kernels.py [--size N] [--repeat K]``.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from hartree_bubbles import _accel, _kernels
from hartree_bubbles.riesz import verify_convolution_identity


def _best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    rho = rng.uniform(0.1, 2.0, args.size)
    r = rng.uniform(0.1, 2.0, args.size)
    diff = r - rho
    R = 2.5

    cases = {
        "power_average(e=2.5, n=3)": lambda: _kernels.power_average(rho, r, diff, 2.5, 3),
        "power_average(e=4.0, n=5)": lambda: _kernels.power_average(rho, r, diff, 4.0, 5),
        "green_average(alpha=1, n=3)": lambda: _kernels.green_average(rho, r, diff, 3, 1.0, R),
        "convolution identity (n=3, g=1)": lambda: verify_convolution_identity(3, 1.0),
    }
    backends = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])
    print(f"{'case':34s} " + " ".join(f"{b:>12s}" for b in backends) + "   speedup  max|diff|")
    for name, fn in cases.items():
        times, outs = {}, {}
        for b in backends:
            with _accel.use_backend(b):
                fn()  # warm-up (JIT compile / cache load)
                times[b], outs[b] = _best_of(fn, args.repeat)
        row = f"{name:34s} " + " ".join(f"{times[b] * 1e3:10.2f}ms" for b in backends)
        if len(backends) == 2:
            gap = np.max(np.abs(np.asarray(outs["numba"]) - np.asarray(outs["numpy"])))
            row += f"  {times['numpy'] / times['numba']:7.1f}x  {gap:.1e}"
        print(row)


if __name__ == "__main__":
    main()
