"""Compare the numba and numpy implementations of the tap-correlation kernel.

    python benchmarks/bench_backends.py --spatial 64 --channels 4 --repeats 7

Prints a table of median seconds per call and the numba speedup, for dense
and zero-skipping tap lists of a DISCO basis.
"""
import argparse
import statistics
import time

import numpy as np

from disco import _kernels
from disco._backend import HAS_NUMBA
from disco.basis import build_basis
from disco.scales import ScaleSet
from disco.solve import SolveConfig


def median_time(fn, repeats):
    fn()  # warmup / JIT compile
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scales", default="1,sqrt2,2,2sqrt2")
    ap.add_argument("--size", type=int, default=3)
    ap.add_argument("--spatial", type=int, default=64)
    ap.add_argument("--channels", type=int, default=4)
    ap.add_argument("--batch", type=int, default=2)
    ap.add_argument("--repeats", type=int, default=7)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if not HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    ss = ScaleSet.parse(args.scales, args.size)
    basis = build_basis(ss, SolveConfig(seed=args.seed, num_samples=256))
    rng = np.random.default_rng(args.seed)
    x = rng.standard_normal((args.batch, args.channels, args.spatial, args.spatial))

    print(f"{'slot':>4} {'k':>3} {'taps':>5} {'numpy s':>10} {'numba s':>10} {'speedup':>8}  max|diff|")
    for sparse in (False, True):
        print("sparse taps" if sparse else "dense taps")
        for s, funcs in enumerate(basis.functions):
            w = rng.standard_normal((args.channels, args.channels, basis.num_functions))
            K = np.tensordot(w, funcs, axes=([-1], [0]))
            dy, dx, wt = _kernels.kernel_taps(K, sparse=sparse)
            t_np = median_time(lambda: _kernels.correlate_taps_numpy(x, dy, dx, wt, True), args.repeats)
            t_nb = median_time(lambda: _kernels.correlate_taps_numba(x, dy, dx, wt, True), args.repeats)
            diff = np.max(np.abs(_kernels.correlate_taps_numpy(x, dy, dx, wt, True)
                                 - _kernels.correlate_taps_numba(x, dy, dx, wt, True)))
            print(f"{s:>4} {K.shape[-1]:>3} {len(dy):>5} {t_np:>10.5f} {t_nb:>10.5f} {t_np / t_nb:>8.2f}  {diff:.2e}")


if __name__ == "__main__":
    main()
