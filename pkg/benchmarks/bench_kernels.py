"""Compare the compiled and pure-Python bound-search backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5] [--cases 20]

Inputs are the observables of depolarizing channels over a spread of
overlaps and losses, the calls a key-gain sweep makes.
"""

import argparse
import statistics
import time

import numpy as np

from b92qkd import kernels
from b92qkd.b92model import ProtocolParams, depolarizing_observables
from b92qkd.estimator import L1_REL_TOL, N_GRID, c_of, delta_of


def cases(n):
    out = []
    for o2, L, p in zip(np.linspace(0.05, 0.95, n), np.tile([0.0, 0.2, 0.5], n), np.tile([0.005, 0.01, 0.02, 0.03], n)):
        params = ProtocolParams.from_overlap2(float(o2))
        obs = depolarizing_observables(float(L), float(p), params)
        out.append((params.alpha2, params.beta2, c_of(obs.err_rate, obs.fil_rate, params),
                    delta_of(obs.fil_rate, params), obs.loss_L))
    return out


def bench(mod, inputs, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        for args in inputs:
            mod.max_x_over_splits(*args, N_GRID, 1e-12, 1e-12, L1_REL_TOL)
        times.append((time.perf_counter() - t0) / len(inputs))
    return statistics.median(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--cases", type=int, default=20)
    args = ap.parse_args()
    inputs = cases(args.cases)
    impls = kernels.backends()
    results = {name: bench(mod, inputs, args.repeat) for name, mod in impls.items()}
    ref = [impls["python"].max_x_over_splits(*a)[0] for a in inputs]
    print(f"selected backend: {kernels.BACKEND}")
    for name, t in results.items():
        got = [impls[name].max_x_over_splits(*a)[0] for a in inputs]
        diff = max(abs(g - r) for g, r in zip(got, ref) if np.isfinite(r))
        print(f"{name:>7}: {t * 1e3:8.3f} ms per bound   max |x - x_python| = {diff:.1e}")
    if "cython" in results:
        print(f"speedup: {results['python'] / results['cython']:.1f}x")


if __name__ == "__main__":
    main()
