"""Time the Bloch sweep kernel: compiled extension vs NumPy fallback.

    python benchmarks/bench_kernels.py [--nodes 41] [--n-xi 7000] [--repeat 5]

One call integrates every detuning node across the whole retarded-time grid,
which is what the solver does twice per x step.
"""

import argparse
import time

import numpy as np

from fastlight import _kernels_py
from fastlight.model import PulseSpec, gauss_hermite_grid
from fastlight.solver import input_envelope

try:
    from fastlight import _kernels as _compiled
except ImportError:
    _compiled = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--nodes", type=int, default=41)
    ap.add_argument("--n-xi", type=int, default=7000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    tau = 0.1
    grid = gauss_hermite_grid(0.733, args.nodes)
    d_xi = tau / 40
    xi = -3.0 + d_xi * np.arange(args.n_xi)
    omega = np.ascontiguousarray(input_envelope(PulseSpec(tau, trunc_halfwidth=25), xi))
    c1 = np.zeros(args.nodes, complex)
    c2 = np.ones(args.nodes, complex)
    rows = np.empty((args.nodes, args.n_xi), complex)
    work = args.nodes * (args.n_xi - 1)

    backends = [("numpy", _kernels_py)]
    if _compiled is not None:
        backends.insert(0, ("cython", _compiled))
    else:
        print("compiled extension not built; timing the fallback only")

    results = {}
    for name, mod in backends:
        t = best_of(lambda: mod.coherence_rows(omega, d_xi, grid.nodes, c1, c2, rows), args.repeat)
        results[name] = t
        print(f"{name:>7}: {t * 1e3:9.2f} ms/sweep  {t / work * 1e9:8.1f} ns per node-step")
    if len(results) == 2:
        print(f"speedup: {results['numpy'] / results['cython']:.1f}x")


if __name__ == "__main__":
    main()
