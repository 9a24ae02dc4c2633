"""Benchmark the compiled phase-average kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--atoms N] [--times T] [--repeat R]
"""

import argparse
import time

import numpy as np

from trapsync._kernels import available_backends, numpy_backend

try:
    from trapsync._kernels import _phase as compiled
except ImportError:
    compiled = None


def make_problem(n_atoms, n_times, jump_rate=52.0, t_max=0.25, seed=1):
    rng = np.random.default_rng(seed)
    rates = rng.normal(8e3, 400.0, n_atoms)
    sens = rng.normal(1e27, 5e25, n_atoms)
    times = np.linspace(0.0, t_max, n_times)
    counts = rng.poisson(jump_rate * t_max, n_atoms)
    offsets = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
    jt = rng.random(int(offsets[-1])) * t_max
    order = np.lexsort((jt, np.repeat(np.arange(n_atoms), counts)))
    jt = jt[order]
    js = rng.exponential(2e-27, int(offsets[-1]))
    return rates, sens, times, jt, js, offsets


def best_of(fn, repeat):
    stamps = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        stamps.append(time.perf_counter() - t0)
    return min(stamps)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--atoms", type=int, default=100_000)
    parser.add_argument("--times", type=int, default=400)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    rates, sens, times, jt, js, offsets = make_problem(args.atoms, args.times)
    cases = {
        "ramsey (static)": lambda mod: mod.ramsey_phase_average(rates, times),
        "ramsey (heated)": lambda mod: mod.ramsey_heated_phase_average(
            rates, sens, 0.0, jt, js, offsets, times),
        "spin echo": lambda mod: mod.echo_phase_average(sens, 0.0, jt, js, offsets, times),
    }

    print(f"atoms={args.atoms} times={args.times} jumps/atom~13 "
          f"(backends available: {', '.join(available_backends())})")
    print(f"{'kernel':<18}{'numpy [ms]':>12}{'compiled [ms]':>15}{'speedup':>9}")
    for name, call in cases.items():
        t_np = best_of(lambda: call(numpy_backend), args.repeat)
        if compiled is not None:
            t_cy = best_of(lambda: call(compiled), args.repeat)
            # cross-check the backends agree before trusting the timing
            for a, b in zip(call(numpy_backend), call(compiled)):
                np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)
            print(f"{name:<18}{t_np * 1e3:>12.1f}{t_cy * 1e3:>15.1f}{t_np / t_cy:>9.2f}")
        else:
            print(f"{name:<18}{t_np * 1e3:>12.1f}{'n/a':>15}{'':>9}")


if __name__ == "__main__":
    main()
