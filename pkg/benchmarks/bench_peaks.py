"""Timing comparison of the peak-rectification kernels.

The kernel dominates dataset generation and exact-backend annealing, so
the compiled extension has to earn its keep here.  Run from the repo
root after an editable install:

    python3 benchmarks/bench_peaks.py [--modes 25] [--elements 100] [--repeat 50]

Both backends share the BLAS grid product, so results agree to float
rounding; the printed max difference should sit near 1e-14.
"""

import argparse
import importlib
import os
import statistics
import sys
import time

import numpy as np


def load_backends():
    import wcris._peaks as frontend

    impls = {}
    np_mod = importlib.import_module("wcris._peaks_np")
    impls["python"] = np_mod.peak_amplitudes
    try:
        cy_mod = importlib.import_module("wcris._peaks_cy")
        impls["compiled"] = cy_mod.peak_amplitudes
    except ImportError:
        pass
    return frontend, impls


def bench(fn, amps, table, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(amps, table)
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--modes", type=int, default=25)
    ap.add_argument("--elements", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args(argv)

    frontend, impls = load_backends()
    table = frontend.sine_table(args.modes)
    rng = np.random.default_rng(0)
    amps = np.abs(rng.normal(0.0, 0.3, size=(args.elements, args.modes)))

    print(f"active backend: {frontend.BACKEND}")
    print(f"rows {args.elements} x modes {args.modes}, "
          f"grid {table.shape[1]} phases, repeat {args.repeat}")
    results = {}
    for name, fn in sorted(impls.items()):
        best, med = bench(fn, amps, table, args.repeat)
        results[name] = fn(amps, table)
        print(f"  {name:9s} best {best * 1e3:7.3f} ms   median {med * 1e3:7.3f} ms")
    if len(results) == 2:
        diff = float(np.max(np.abs(results["python"] - results["compiled"])))
        print(f"max |python - compiled| = {diff:.3e}")
    elif "compiled" not in impls:
        print("compiled extension not built; only the fallback was timed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
