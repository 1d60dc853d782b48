"""Hot inner loops, with numba and pure-numpy implementations.

The numba path is used when numba imports cleanly and the environment
variable ``GCE_METROLOGY_NUMBA`` is not set to ``0``.  Both paths are
always importable under explicit names (``*_numpy`` / ``*_numba``) so the
test suite and ``benchmarks/bench_kernels.py`` can compare them.
"""
import os

import numpy as np

try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def _env_wants_numba():
    return os.environ.get("GCE_METROLOGY_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


USE_NUMBA = HAVE_NUMBA and _env_wants_numba()


# --------------------------------------------------------------------------
# Masked elementwise division: the eigenbasis solve of E_rho(X) = M.
# --------------------------------------------------------------------------

def masked_divide_numpy(rhs, coeff, cutoff):
    out = np.zeros_like(rhs)
    mask = coeff > cutoff
    out[mask] = rhs[mask] / coeff[mask]
    return out


@njit(cache=True)
def _masked_divide_jit(rhs, coeff, cutoff):
    n, m = rhs.shape
    out = np.zeros((n, m), dtype=np.complex128)
    for i in range(n):
        for j in range(m):
            c = coeff[i, j]
            if c > cutoff:
                out[i, j] = rhs[i, j] / c
    return out


def masked_divide_numba(rhs, coeff, cutoff):
    return _masked_divide_jit(
        np.ascontiguousarray(rhs, dtype=np.complex128),
        np.ascontiguousarray(coeff, dtype=np.float64),
        float(cutoff),
    )


# --------------------------------------------------------------------------
# Averaging an operator over a set of index permutations (conjugation by
# permutation matrices): out[r, c] = mean_p B[p[r], p[c]].
# --------------------------------------------------------------------------

def permutation_average_numpy(b, index_maps, weights):
    out = np.zeros_like(b, dtype=np.complex128)
    for p, w in zip(index_maps, weights):
        out += w * b[np.ix_(p, p)]
    return out


@njit(cache=True)
def _permutation_average_jit(b, index_maps, weights):
    n_perm, dim = index_maps.shape
    out = np.zeros((dim, dim), dtype=np.complex128)
    for k in range(n_perm):
        w = weights[k]
        p = index_maps[k]
        for r in range(dim):
            pr = p[r]
            for c in range(dim):
                out[r, c] += w * b[pr, p[c]]
    return out


def permutation_average_numba(b, index_maps, weights):
    return _permutation_average_jit(
        np.ascontiguousarray(b, dtype=np.complex128),
        np.ascontiguousarray(index_maps, dtype=np.int64),
        np.ascontiguousarray(weights, dtype=np.float64),
    )


# --------------------------------------------------------------------------
# Classical Rao-Blackwell table: c[z, x] = sum_y P(z|y) P(y|x) b(y) / P(z|x).
# --------------------------------------------------------------------------

def conditional_mean_table_numpy(pyx, pzy, b, tiny):
    pzx = pyx @ pzy                         # (x, z)
    num = (pyx * b[None, :]) @ pzy          # (x, z)
    out = np.full(pzx.shape, np.nan)
    mask = pzx > tiny
    out[mask] = num[mask] / pzx[mask]
    return out.T, pzx.T


@njit(cache=True)
def _conditional_mean_table_jit(pyx, pzy, b, tiny):
    nx, ny = pyx.shape
    nz = pzy.shape[1]
    out = np.full((nz, nx), np.nan)
    pzx = np.zeros((nz, nx))
    for x in range(nx):
        for z in range(nz):
            num = 0.0
            den = 0.0
            for y in range(ny):
                w = pzy[y, z] * pyx[x, y]
                num += w * b[y]
                den += w
            pzx[z, x] = den
            if den > tiny:
                out[z, x] = num / den
    return out, pzx


def conditional_mean_table_numba(pyx, pzy, b, tiny):
    return _conditional_mean_table_jit(
        np.ascontiguousarray(pyx, dtype=np.float64),
        np.ascontiguousarray(pzy, dtype=np.float64),
        np.ascontiguousarray(b, dtype=np.float64),
        float(tiny),
    )


if USE_NUMBA:
    masked_divide = masked_divide_numba
    permutation_average = permutation_average_numba
    conditional_mean_table = conditional_mean_table_numba
else:
    masked_divide = masked_divide_numpy
    permutation_average = permutation_average_numpy
    conditional_mean_table = conditional_mean_table_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
