import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gce_metrology.errors import DimensionError, ValidationError
from gce_metrology.operators import (JORDAN, LEFT, ROOT, ProductKind, density, direct_sum, emap,
                                     maximally_mixed, partial_trace, permutation_unitary, permute_subsystems,
                                     pure_state, spectral, tensor, weighted_inner, weighted_norm_sq)
from gce_metrology.testing import random_density, random_hermitian, random_operator

import oracles


def test_product_kind_parse():
    assert ProductKind.parse("jordan") is JORDAN
    assert ProductKind.parse(ROOT) is ROOT
    with pytest.raises(ValidationError):
        ProductKind.parse("symmetric")


@pytest.mark.parametrize("product", [JORDAN, LEFT, ROOT])
def test_emap_matches_superoperator(product, rng):
    rho = random_density(4, rng)
    a = random_operator(4, rng)
    want = (oracles.emap_superop(product, rho.matrix) @ a.ravel()).reshape(4, 4)
    assert np.allclose(emap(product, rho, a), want, atol=1e-12)


def test_emap_definitions_on_pure_state():
    rho = pure_state([1, 1])
    a = np.diag([1.0, -1.0]).astype(complex)
    r = rho.matrix
    assert np.allclose(emap(JORDAN, rho, a), 0.5 * (r @ a + a @ r))
    assert np.allclose(emap(LEFT, rho, a), r @ a)
    # pure state: sqrt(rho) = rho
    assert np.allclose(emap(ROOT, rho, a), r @ a @ r)


def test_weighted_norm_of_identity_is_one(rng):
    rho = random_density(5, rng)
    for product in (JORDAN, LEFT, ROOT):
        assert weighted_norm_sq(product, rho, np.eye(5)) == pytest.approx(1.0, abs=1e-12)


def test_jordan_inner_is_real_part_symmetric(rng):
    rho = random_density(3, rng)
    a, b = random_hermitian(3, rng), random_hermitian(3, rng)
    assert weighted_inner(JORDAN, rho, a, b) == pytest.approx(np.conj(weighted_inner(JORDAN, rho, b, a)))


def test_density_clamps_tiny_negative_and_rejects_large():
    rho = density(np.diag([1.0 + 5e-13, -5e-13]))
    assert rho.eigenvalues.min() == 0.0
    assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValidationError, match="negative eigenvalue"):
        density(np.diag([1.1, -0.1]))
    with pytest.raises(ValidationError, match="Hermitian"):
        density(np.array([[0.5, 1.0], [0.0, 0.5]]))


def test_density_reconstructs_and_orders(rng):
    rho = random_density(6, rng, rank=3)
    w, v = rho.eigenvalues, rho.eigenvectors
    assert np.all(np.diff(w) <= 0)
    assert np.allclose((v * w) @ v.conj().T, rho.matrix, atol=1e-10)
    assert rho.support_rank == 3


def test_maximally_mixed():
    assert np.allclose(maximally_mixed(3).matrix, np.eye(3) / 3)


def test_tensor_and_direct_sum():
    a, b = np.diag([1.0, 2.0]), np.array([[0, 1], [1, 0]])
    assert np.allclose(tensor(a, b), np.kron(a, b))
    ds = direct_sum([a, np.ones((1, 1))])
    assert ds.shape == (3, 3)
    assert np.allclose(ds[:2, :2], a) and ds[2, 2] == 1 and np.all(ds[:2, 2] == 0)


@pytest.mark.parametrize("dims,keep", [([2, 3], [0]), ([2, 3], [1]), ([2, 2, 2], [0, 2]), ([3, 2, 2], [1])])
def test_partial_trace_matches_loops(dims, keep, rng):
    a = random_operator(int(np.prod(dims)), rng)
    assert np.allclose(partial_trace(a, dims, keep), oracles.partial_trace_loops(a, dims, keep), atol=1e-12)


def test_partial_trace_dimension_error(rng):
    with pytest.raises(DimensionError):
        partial_trace(random_operator(5, rng), [2, 2], [0])


def test_permute_subsystems_matches_unitary(rng):
    d, n = 2, 3
    b = random_operator(d ** n, rng)
    for perm in itertools.permutations(range(n)):
        u = permutation_unitary(perm, d)
        assert np.allclose(permute_subsystems(b, perm, d), u @ b @ u.conj().T, atol=1e-12)


def test_permutation_moves_factors():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    eye = np.eye(2)
    # subsystem 0 goes to slot 2
    out = permute_subsystems(tensor(x, eye, z), [2, 0, 1], 2)
    assert np.allclose(out, tensor(eye, z, x))


def test_spectral_merges_degenerate_eigenvalues(rng):
    u = np.linalg.qr(random_operator(4, rng))[0]
    a = u @ np.diag([1.0, 1.0 + 1e-12, 2.0, 3.0]) @ u.conj().T
    pvm = spectral(a)
    assert len(pvm.eigenvalues) == 3
    assert np.allclose(sum(pvm.projectors), np.eye(4), atol=1e-10)
    for p, q in itertools.combinations(pvm.projectors, 2):
        assert np.max(np.abs(p @ q)) < 1e-10
    assert np.allclose(pvm.reconstruct(), a, atol=1e-10)


def test_spectral_rejects_non_hermitian(rng):
    with pytest.raises(ValidationError):
        spectral(np.array([[0, 1], [0, 0]], dtype=complex))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 6), rank=st.integers(1, 6))
def test_jordan_weighted_norm_nonnegative(seed, d, rank):
    rng = np.random.default_rng(seed)
    rho = random_density(d, rng, min(rank, d))
    a = random_operator(d, rng)
    for product in (JORDAN, LEFT, ROOT):
        assert weighted_norm_sq(product, rho, a) >= -1e-12
