import itertools
import os
import subprocess
import sys

import numpy as np
import pytest

from gce_metrology import _kernels
from gce_metrology.operators import subsystem_index_map
from gce_metrology.testing import random_operator

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


def _maps(n, d):
    perms = list(itertools.permutations(range(n)))
    return np.array([subsystem_index_map(p, d) for p in perms]), np.full(len(perms), 1.0 / len(perms))


def test_masked_divide_numpy_semantics():
    rhs = np.array([[2.0, 4.0], [6.0, 8.0]], dtype=complex)
    coeff = np.array([[2.0, 1e-20], [3.0, 4.0]])
    out = _kernels.masked_divide_numpy(rhs, coeff, 1e-12)
    assert np.allclose(out, [[1.0, 0.0], [2.0, 2.0]])


def test_permutation_average_numpy_against_loops(rng):
    b = random_operator(8, rng)
    maps, w = _maps(3, 2)
    want = np.zeros_like(b)
    for m, wi in zip(maps, w):
        for r in range(8):
            for c in range(8):
                want[r, c] += wi * b[m[r], m[c]]
    assert np.allclose(_kernels.permutation_average_numpy(b, maps, w), want, atol=1e-14)


@needs_numba
def test_masked_divide_backends_agree(rng):
    rhs = random_operator(7, rng)
    coeff = rng.random((7, 7))
    coeff[0, :] = 0.0
    a = _kernels.masked_divide_numpy(rhs, coeff, 1e-3)
    b = _kernels.masked_divide_numba(rhs, coeff, 1e-3)
    # numba promotes the real divisor to complex division; agreement is to rounding
    assert np.max(np.abs(a - b)) <= 1e-14 * max(1.0, np.abs(a).max())
    assert np.array_equal(a == 0, b == 0)


@needs_numba
@pytest.mark.parametrize("n", [2, 3, 4])
def test_permutation_average_backends_agree(n, rng):
    b = random_operator(2 ** n, rng)
    maps, w = _maps(n, 2)
    a = _kernels.permutation_average_numpy(b, maps, w)
    c = _kernels.permutation_average_numba(b, maps, w)
    assert np.max(np.abs(a - c)) < 1e-14


@needs_numba
def test_conditional_mean_backends_agree(rng):
    pyx = rng.dirichlet(np.ones(5), size=4)
    pzy = rng.dirichlet(np.ones(3), size=5)
    pzy[:, 2] = 0.0
    pzy /= pzy.sum(axis=1, keepdims=True)
    b = rng.standard_normal(5)
    t1, p1 = _kernels.conditional_mean_table_numpy(pyx, pzy, b, 1e-300)
    t2, p2 = _kernels.conditional_mean_table_numba(pyx, pzy, b, 1e-300)
    assert np.allclose(p1, p2, atol=1e-15)
    assert np.array_equal(np.isnan(t1), np.isnan(t2))
    assert np.allclose(t1[~np.isnan(t1)], t2[~np.isnan(t2)], atol=1e-14)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, GCE_METROLOGY_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", "from gce_metrology import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_numpy_backend_gives_same_worked_model():
    code = ("import numpy as np\n"
            "from gce_metrology.bayes import BayesModel, personick\n"
            "m = BayesModel(None, [0.5, 0.5], [np.diag([1.0, 0.0]), np.full((2, 2), 0.5)], [0.0, 1.0])\n"
            "print(repr(personick(m).bayes_mse))")
    env = dict(os.environ, GCE_METROLOGY_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert abs(float(out.stdout) - 0.125) < 1e-12
