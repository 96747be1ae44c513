"""Compare the compiled threshold-scan kernel against the numpy fallback.

Two workloads, both lifted from real call sites: the single-pair scan
that every covert-metric estimate runs per sub-carrier, and the batched
scan over candidate warden positions that dominates the box search.
Outputs are checked bit-identical between backends before any timing is
believed.

Run from the repository root:

    python3 benchmarks/bench_backends.py [--reps 7]
"""

import argparse
import sys
import time

import numpy as np

from covertauction import kernels
from covertauction.channel import AlphaMuParams, alpha_mu_sample

RAYLEIGH = AlphaMuParams(2.0, 1.0, 1.0)

# magnitudes of a mid-sweep jamming point: node 7.2 m and jammer 8.6 m
# from the warden, 1 mW per sub-carrier against ~0.4 W of jamming
C1 = 1e-3 / 52.0
C2 = 0.45 / 74.0
SIGMA2 = 1.5e-3
SCAN = dict(grid_points=64, quantile=0.999, rel_tol=1e-3)


def _median_time(fn, reps):
    times = []
    for _ in range(reps):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return float(np.median(times))


def bench_single(samples, reps, rng):
    hwm = alpha_mu_sample(RAYLEIGH, rng, samples)
    hwg = alpha_mu_sample(RAYLEIGH, rng, samples)
    results = {}
    timings = {}
    for name in kernels.available_backends():
        with kernels.use_backend(name):
            results[name] = kernels.optimal_dep(hwm, hwg, C1, C2, SIGMA2, **SCAN)
            timings[name] = _median_time(
                lambda: kernels.optimal_dep(hwm, hwg, C1, C2, SIGMA2, **SCAN), reps
            )
    return results, timings


def bench_batch(samples, positions, reps, rng):
    hwm = alpha_mu_sample(RAYLEIGH, rng, samples)
    hwg = alpha_mu_sample(RAYLEIGH, rng, samples)
    # distances spread like a box-search lattice around the nominal spot
    scale = rng.uniform(0.7, 1.4, positions)
    c1 = C1 * scale
    c2 = C2 / scale
    results = {}
    timings = {}
    for name in kernels.available_backends():
        with kernels.use_backend(name):
            results[name] = kernels.optimal_dep_batch(
                hwm, hwg, c1, c2, SIGMA2, **SCAN
            )
            timings[name] = _median_time(
                lambda: kernels.optimal_dep_batch(hwm, hwg, c1, c2, SIGMA2, **SCAN),
                reps,
            )
    return results, timings


def _check_identical(results, label):
    names = list(results)
    if len(names) < 2:
        return
    a = np.asarray(results[names[0]], dtype=float)
    b = np.asarray(results[names[1]], dtype=float)
    if not np.array_equal(a, b):
        raise AssertionError(f"{label}: backends disagree, timings are meaningless")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=7)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(args.seed)

    if len(kernels.available_backends()) < 2:
        print("compiled kernel not built; only the python backend is available")

    def show(label, timings):
        py = timings["python"]
        comp = timings.get("compiled")
        comp_cell = f"{comp * 1e3:10.2f}ms" if comp else f"{'-':>12}"
        speed_cell = f"{py / comp:9.1f}x" if comp else f"{'-':>10}"
        print(f"{label:<34}{py * 1e3:10.2f}ms{comp_cell}{speed_cell}")

    print(f"active backend: {kernels.backend_name()}")
    print(f"{'workload':<34}{'python':>12}{'compiled':>12}{'speedup':>10}")
    for samples in (1_000, 10_000, 100_000):
        results, timings = bench_single(samples, args.reps, rng)
        _check_identical(results, f"single scan @ {samples}")
        show(f"single scan, {samples} draws", timings)
    for samples, positions in ((1_500, 25), (1_500, 100), (10_000, 50)):
        results, timings = bench_batch(samples, positions, args.reps, rng)
        _check_identical(results, f"batch scan @ {samples}x{positions}")
        show(f"batch scan, {samples} x {positions} posns", timings)
    return 0


if __name__ == "__main__":
    sys.exit(main())
