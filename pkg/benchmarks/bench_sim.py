"""Time the compiled and pure-Python path kernels on the same workload.

    python3 benchmarks/bench_sim.py [--paths 200] [--steps 200] [--repeat 3]

Both kernels see identical Philox streams, so the script also confirms that
their final states agree bit for bit.
"""

import argparse
import time

import numpy as np

from thomalab.sim import _kernel_py
from thomalab.sim.core import SimState, signs
from thomalab.suites import REFERENCE_POINT, SIM_PARAMS


def _time(kernel, x0, sg, args, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = kernel.run_paths(x0, sg, *args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=200)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args(argv)

    p = SIM_PARAMS
    s0 = SimState.from_point(REFERENCE_POINT, a.n, a.m, p.theta)
    x0, sg = s0.x, signs(a.n, a.m, p.theta)
    args = (p.theta, p.s1, p.s2, a.dt, a.steps, 0, a.paths, 0, 1e-6, 20, 0)

    py_t, py_out = _time(_kernel_py, x0, sg, args, a.repeat)
    print(f"python : {py_t:8.3f} s  ({a.paths} paths x {a.steps} steps)")
    try:
        from thomalab.sim import _kernel
    except ImportError:
        print("cython : extension not built")
        return
    cy_t, cy_out = _time(_kernel, x0, sg, args, a.repeat)
    print(f"cython : {cy_t:8.3f} s")
    print(f"speedup: {py_t / cy_t:8.1f}x")
    same = np.array_equal(py_out[0], cy_out[0]) and np.array_equal(py_out[3], cy_out[3])
    print(f"identical final states: {same}")


if __name__ == "__main__":
    main()
