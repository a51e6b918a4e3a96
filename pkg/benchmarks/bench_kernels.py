"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--sizes 2000 100000 1000000] [--repeat 5]

Each kernel is timed on identical inputs with ``timeit``; the best of
``--repeat`` runs is reported per call, along with the speedup of the compiled
backend. A sweep-shaped workload (many fits on 2000-unit datasets) is timed
through the public API in subprocesses so each run picks its backend at import.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from trigeval import _pykernels

try:
    from trigeval import _ckernels
except ImportError:
    _ckernels = None

SWEEP_SNIPPET = """
import time, trigeval as t
from trigeval.sim import SweepConfig, run_sweep
cfg = SweepConfig(t.GenConfig(n_units=2000, seed=1), "trigger_intensity", (0.5,), 300)
t0 = time.perf_counter(); run_sweep(cfg, workers=1); print(time.perf_counter() - t0)
"""


def best_per_call(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def kernel_table(sizes, repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<14}{'N':>10}{'python us':>14}{'cython us':>14}{'speedup':>10}")
    for n in sizes:
        y = rng.normal(size=n)
        x = rng.uniform(0, 1, n)
        t = rng.integers(0, 2, n).astype(np.int8)
        cases = {
            "trigger_sums": lambda mod: mod.trigger_sums(y, x, t),
            "ssr_trigger": lambda mod: mod.ssr_trigger(y, x, t, 1.0, 0.5, 0.3),
            "ssr_baseline": lambda mod: mod.ssr_baseline(y, t, 1.0, 0.5),
        }
        for name, call in cases.items():
            py = best_per_call(lambda: call(_pykernels), repeat) * 1e6
            if _ckernels is None:
                print(f"{name:<14}{n:>10}{py:>14.1f}{'n/a':>14}{'':>10}")
                continue
            cy = best_per_call(lambda: call(_ckernels), repeat) * 1e6
            print(f"{name:<14}{n:>10}{py:>14.1f}{cy:>14.1f}{py / cy:>9.1f}x")


def sweep_timing():
    print("\nsweep workload: 300 replications x 2000 units, baseline + full fits")
    for pure in ("1", "0"):
        env = {**os.environ, "TRIGEVAL_PURE": pure}
        out = subprocess.run([sys.executable, "-c", SWEEP_SNIPPET], env=env,
                             capture_output=True, text=True, check=True)
        label = "python" if pure == "1" else "cython" if _ckernels else "python"
        print(f"  {label:<8}{float(out.stdout):8.3f} s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[2000, 100_000, 1_000_000])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-sweep", action="store_true")
    args = ap.parse_args()
    kernel_table(args.sizes, args.repeat)
    if not args.skip_sweep:
        sweep_timing()


if __name__ == "__main__":
    main()
