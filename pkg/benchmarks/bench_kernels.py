"""Numba versus pure-numpy timings for the hot kernels.

    python benchmarks/bench_kernels.py [--repeat 20]

The numba column is blank when numba is not installed.  Timings exclude the
first (compiling) call.
"""
import argparse
import itertools
import timeit

import numpy as np

from gce_metrology import _kernels
from gce_metrology.operators import subsystem_index_map
from gce_metrology.testing import random_operator


def _time(fn, repeat):
    fn()  # warm-up / JIT compile
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def cases(rng):
    for n in (4, 5, 6):
        b = random_operator(2 ** n, rng)
        maps = np.array([subsystem_index_map(p, 2) for p in itertools.permutations(range(n))])
        w = np.full(len(maps), 1.0 / len(maps))
        yield (f"permutation_average n={n}",
               lambda b=b, maps=maps, w=w: _kernels.permutation_average_numpy(b, maps, w),
               lambda b=b, maps=maps, w=w: _kernels.permutation_average_numba(b, maps, w))
    for d in (64, 256):
        rhs = random_operator(d, rng)
        coeff = rng.random((d, d))
        yield (f"masked_divide d={d}",
               lambda rhs=rhs, coeff=coeff: _kernels.masked_divide_numpy(rhs, coeff, 1e-3),
               lambda rhs=rhs, coeff=coeff: _kernels.masked_divide_numba(rhs, coeff, 1e-3))
    pyx = rng.dirichlet(np.ones(64), size=32)
    pzy = rng.dirichlet(np.ones(16), size=64)
    b = rng.standard_normal(64)
    yield ("conditional_mean_table 32x64x16",
           lambda: _kernels.conditional_mean_table_numpy(pyx, pzy, b, 1e-300),
           lambda: _kernels.conditional_mean_table_numba(pyx, pzy, b, 1e-300))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':34s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>8s}")
    for name, f_np, f_nb in cases(rng):
        t_np = _time(f_np, args.repeat) * 1e3
        if _kernels.HAVE_NUMBA:
            t_nb = _time(f_nb, args.repeat) * 1e3
            print(f"{name:34s} {t_np:12.3f} {t_nb:12.3f} {t_np / t_nb:8.1f}")
        else:
            print(f"{name:34s} {t_np:12.3f} {'':>12s} {'':>8s}")


if __name__ == "__main__":
    main()
