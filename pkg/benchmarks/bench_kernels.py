"""Compiled vs fallback timings for the two hot kernels.

    python benchmarks/bench_kernels.py [--repeat N]

The level sweep is timed for the numba, vectorised numpy and interpreted
paths on the flow-1 polynomial. The packet loop is timed compiled and
interpreted on a short run of the two-flow RED scenario. Results are
checked for equality before any timing is printed.
"""
import argparse
import time

import numpy as np

from ecnstar import _jit, kernels
from ecnstar.scenario import paper_scenario
from ecnstar.sim import simulate_red_path
from ecnstar.solver import level_grid

FLOW1 = np.array([1.0, -1.29652, 0.56768, -0.09572, 0.00548])


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--budget", type=int, default=2000, help="packets per flow for the packet loop")
    args = ap.parse_args()
    if not _jit.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    levels = level_grid(1e-3)
    few = levels[::20]
    t = time.perf_counter()
    ref = kernels.sweep_numba(FLOW1, levels)
    compile_sweep = time.perf_counter() - t
    assert all(np.array_equal(a, b, equal_nan=True) for a, b in zip(ref, kernels.sweep_numpy(FLOW1, levels)))
    assert all(np.array_equal(a, b, equal_nan=True)
               for a, b in zip(kernels.sweep_python(FLOW1, few), kernels.sweep_numpy(FLOW1, few)))

    print(f"level sweep, {levels.size} levels x 10001 grid points")
    print(f"  numba first call (compile) {compile_sweep * 1e3:10.1f} ms")
    t_nb = best_of(lambda: kernels.sweep_numba(FLOW1, levels), args.repeat)
    t_np = best_of(lambda: kernels.sweep_numpy(FLOW1, levels), args.repeat)
    t_py = best_of(lambda: kernels.sweep_python(FLOW1, few), 1) * levels.size / few.size
    print(f"  numba                      {t_nb * 1e3:10.2f} ms")
    print(f"  numpy                      {t_np * 1e3:10.2f} ms  ({t_np / t_nb:.0f}x)")
    print(f"  interpreted (extrapolated) {t_py * 1e3:10.0f} ms  ({t_py / t_nb:.0f}x)")

    sc = paper_scenario(packet_budget=args.budget)
    t = time.perf_counter()
    a = simulate_red_path(sc, use_numba=True)
    compile_sim = time.perf_counter() - t
    print(f"packet loop, two-flow RED scenario, {args.budget} packets per flow, {a.ticks} ticks")
    print(f"  numba first call (compile) {compile_sim:10.2f} s")
    t_nb = best_of(lambda: simulate_red_path(sc, use_numba=True), args.repeat)
    t = time.perf_counter()
    b = simulate_red_path(sc, use_numba=False)
    t_py = time.perf_counter() - t
    assert a.distributions == b.distributions and a.routers == b.routers
    print(f"  numba                      {t_nb:10.3f} s")
    print(f"  interpreted                {t_py:10.3f} s  ({t_py / t_nb:.0f}x)")


if __name__ == "__main__":
    main()
