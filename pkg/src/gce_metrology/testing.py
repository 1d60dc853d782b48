"""Random instances for property checks, the self-test and benchmarks."""
import itertools

import numpy as np
from scipy.stats import unitary_group

from .channels import Channel
from .operators import dag, density, permutation_unitary, tensor


def rng_of(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def ginibre(rng, rows, cols=None):
    cols = rows if cols is None else cols
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_unitary(d, rng):
    return unitary_group.rvs(d, random_state=rng) if d > 1 else np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))


def random_density(d, rng, rank=None):
    """Induced-measure mixed state; ``rank`` defaults to full."""
    g = ginibre(rng, d, rank or d)
    m = g @ dag(g)
    return density(m / np.trace(m).real)


def random_hermitian(d, rng, scale=1.0):
    g = ginibre(rng, d)
    return scale * 0.5 * (g + dag(g))


def random_operator(d, rng):
    return ginibre(rng, d)


def random_channel(d_in, d_out, rng, n_kraus=None):
    """Kraus operators cut from a Haar-ish random isometry ``C^d_in -> C^(d_out k)``."""
    k = n_kraus or int(rng.integers(1, d_in * d_out + 1))
    k = max(k, -(-d_in // d_out))  # an isometry needs d_out * k >= d_in
    q, _ = np.linalg.qr(ginibre(rng, d_out * k, d_in))
    return Channel(q.reshape(k, d_out, d_in), f"random({d_in}->{d_out})")


def random_projectors(d, rng, n_blocks=None):
    """Orthogonal resolution of identity into random-rank blocks in a random basis."""
    n_blocks = n_blocks or int(rng.integers(1, d + 1))
    n_blocks = min(n_blocks, d)
    cuts = np.sort(rng.choice(np.arange(1, d), size=n_blocks - 1, replace=False)) if n_blocks > 1 else []
    bounds = [0, *cuts, d]
    v = random_unitary(d, rng)
    out = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        cols = v[:, lo:hi]
        out.append(cols @ dag(cols))
    return out


def block_state(projectors, rng):
    """Random state commuting with every projector."""
    d = projectors[0].shape[0]
    w = rng.dirichlet(np.ones(len(projectors)))
    m = np.zeros((d, d), dtype=complex)
    for wi, p in zip(w, projectors):
        g = ginibre(rng, d)
        blk = p @ g @ dag(g) @ p
        m += wi * blk / np.trace(blk).real
    return density(m)


def block_operator(projectors, rng):
    """Random Hermitian operator commuting with every projector."""
    h = random_hermitian(projectors[0].shape[0], rng)
    return sum(p @ h @ p for p in projectors)


def permutation_unitaries(n, d):
    return [permutation_unitary(p, d) for p in itertools.permutations(range(n))]


def product_state(rho, n):
    return tensor(*([density(rho).matrix] * n))
