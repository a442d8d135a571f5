"""Compare the compiled replication kernel with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--replicates R] [--horizon N] [--repeat K]

Both backends run the same campaign; their outputs are checked for bitwise
equality before timings are reported.
"""

import argparse
import time

import numpy as np

from bpre import simulator
from bpre.environment import EnvironmentModel
from bpre.offspring import Geometric1, ShiftedPoisson, TwoPoint

SCENARIOS = {
    "geometric": EnvironmentModel(((Geometric1(0.3), 0.5), (Geometric1(0.6), 0.5))),
    "mixed": EnvironmentModel(((ShiftedPoisson(1.5), 0.4), (TwoPoint(3, 0.5), 0.3), (Geometric1(0.4), 0.3))),
}


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--replicates", type=int, default=2000)
    parser.add_argument("--horizon", type=int, default=256)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if simulator._core is None:
        raise SystemExit("compiled core not built; run `pip install -e . --no-build-isolation` first")

    print(f"{'scenario':<10} {'backend':<9} {'seconds':>9} {'replicates/s':>13} {'speedup':>8}")
    for name, model in SCENARIOS.items():
        results = {}
        for backend in ("python", "compiled"):
            secs, final = best_of(lambda: simulator.simulate_final(
                model, args.horizon, args.replicates, 1, threads=1, backend=backend), args.repeat)
            results[backend] = (secs, final)
        py, co = results["python"], results["compiled"]
        if not (np.array_equal(py[1].log_z, co[1].log_z) and np.array_equal(py[1].s, co[1].s)):
            raise SystemExit(f"{name}: backends disagree")
        for backend, (secs, _) in results.items():
            speed = py[0] / secs
            print(f"{name:<10} {backend:<9} {secs:>9.3f} {args.replicates / secs:>13.0f} {speed:>7.1f}x")


if __name__ == "__main__":
    main()
