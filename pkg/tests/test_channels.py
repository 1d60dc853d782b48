import numpy as np
import pytest

from gce_metrology.channels import (Channel, ancilla_discard_channel, block_dephasing_channel,
                                    block_measure_prepare_channel, check_projectors, classical_channel,
                                    compose, compose_chain, cq_channel, depolarizing_channel,
                                    identity_channel, measurement_channel, random_unitary_channel,
                                    unitary_channel)
from gce_metrology.errors import DimensionError, ValidationError
from gce_metrology.operators import partial_trace
from gce_metrology.testing import (random_channel, random_density, random_hermitian, random_projectors,
                                   random_unitary)

import oracles


def test_rejects_non_trace_preserving():
    with pytest.raises(ValidationError, match="trace preserving"):
        Channel(np.array([np.eye(2) * 0.9]))


def test_apply_matches_superoperator(rng):
    ch = random_channel(3, 4, rng)
    rho = random_density(3, rng)
    want = (oracles.kraus_superop(ch.kraus) @ rho.matrix.ravel()).reshape(4, 4)
    assert np.allclose(ch.apply(rho).matrix, want, atol=1e-12)


def test_adjoint_duality(rng):
    ch = random_channel(3, 2, rng)
    a = random_hermitian(3, rng)
    b = random_hermitian(2, rng)
    assert np.trace(b @ ch.apply_op(a)) == pytest.approx(np.trace(ch.adjoint_apply(b) @ a))


def test_choi_is_psd_with_identity_partial_trace(rng):
    ch = random_channel(2, 3, rng)
    j = ch.choi()
    assert np.linalg.eigvalsh(j).min() > -1e-12
    # tracing out the output leaves the identity on the input
    assert np.allclose(partial_trace(j, [2, 3], [0]), np.eye(2), atol=1e-12)


def test_compose_matches_sequential(rng):
    f = random_channel(2, 3, rng, 4)
    g = random_channel(3, 2, rng, 5)
    rho = random_density(2, rng)
    gf = compose(g, f)
    assert gf.kraus.shape[0] <= 4  # compressed to at most d_in * d_out
    assert np.allclose(gf.apply(rho).matrix, g.apply(f.apply(rho)).matrix, atol=1e-12)
    assert np.allclose(compose_chain([f, g]).apply(rho).matrix, gf.apply(rho).matrix, atol=1e-12)


def test_compose_dimension_mismatch(rng):
    with pytest.raises(DimensionError):
        compose(random_channel(2, 2, rng), random_channel(2, 3, rng))


def test_identity_and_unitary(rng):
    rho = random_density(3, rng)
    assert np.allclose(identity_channel(3).apply(rho).matrix, rho.matrix)
    u = random_unitary(3, rng)
    assert np.allclose(unitary_channel(u).apply(rho).matrix, u @ rho.matrix @ u.conj().T)
    with pytest.raises(ValidationError):
        unitary_channel(np.diag([1.0, 2.0]))


def test_depolarizing_sends_everything_to_maximally_mixed(rng):
    assert np.allclose(depolarizing_channel(3).apply(random_density(3, rng)).matrix, np.eye(3) / 3)


def test_cq_channel_mixes_conditional_states(rng):
    states = [random_density(2, rng) for _ in range(3)]
    ch = cq_channel(states)
    p = np.array([0.2, 0.3, 0.5])
    out = ch.apply(np.diag(p).astype(complex))
    assert np.allclose(out.matrix, sum(pi * s.matrix for pi, s in zip(p, states)))


def test_measurement_channel_gives_outcome_distribution(rng):
    rho = random_density(2, rng)
    povm = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    out = measurement_channel(povm).apply(rho).matrix
    assert np.allclose(out, np.diag(np.diag(rho.matrix)), atol=1e-12)
    with pytest.raises(ValidationError, match="sum to identity"):
        measurement_channel([np.diag([1.0, 0.0])])


def test_ancilla_discard_is_partial_trace(rng):
    rho = random_density(6, rng)
    out = ancilla_discard_channel(3, 2).apply(rho).matrix
    assert np.allclose(out, oracles.partial_trace_loops(rho.matrix, [3, 2], [0]), atol=1e-12)


def test_random_unitary_weights(rng):
    us = [np.eye(2), np.diag([1.0, -1.0])]
    ch = random_unitary_channel(us, [0.5, 0.5])
    rho = random_density(2, rng)
    assert np.allclose(ch.apply(rho).matrix, np.diag(np.diag(rho.matrix)), atol=1e-12)
    with pytest.raises(ValidationError):
        random_unitary_channel(us, [0.7, 0.7])


def test_projector_validation(rng):
    ps = random_projectors(4, rng, 2)
    check_projectors(ps)
    with pytest.raises(ValidationError, match="sum to identity"):
        check_projectors(ps[:1])
    with pytest.raises(ValidationError, match="orthogonal"):
        check_projectors([np.eye(2), np.eye(2)])


def test_block_channels(rng):
    ps = random_projectors(4, rng, 2)
    rho = random_density(4, rng)
    deph = block_dephasing_channel(ps).apply(rho).matrix
    assert np.allclose(deph, sum(p @ rho.matrix @ p for p in ps), atol=1e-12)
    mp = block_measure_prepare_channel(ps).apply(rho).matrix
    want = sum(np.trace(p @ rho.matrix).real * p / np.trace(p).real for p in ps)
    assert np.allclose(mp, want, atol=1e-12)


def test_classical_channel():
    t = np.array([[0.9, 0.1], [0.2, 0.8], [0.5, 0.5]])
    out = classical_channel(t).apply(np.diag([0.2, 0.3, 0.5]).astype(complex)).matrix
    assert np.allclose(np.diag(out).real, np.array([0.2, 0.3, 0.5]) @ t)
    with pytest.raises(ValidationError):
        classical_channel([[0.5, 0.4]])
