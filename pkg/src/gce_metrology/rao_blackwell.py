"""Frequentist MSE and quantum Rao-Blackwellization.

Each construction pairs a channel ``G`` with a closed-form GCE ``G_* B``
that does not depend on the unknown parameter:

* :class:`AncillaDiscard`  - ``rho_x = sigma_x (x) tau``, ``G`` traces out the ancilla
* :class:`Symmetrize`      - states invariant under a set of unitaries, ``G`` averages them
* :class:`PermutationHaar` - the symmetric-group special case of ``Symmetrize``
* :class:`DirectSum`       - block-diagonal states, ``G`` dephases the blocks
* :class:`SinhaStatistic`  - commuting block families, ``G`` measures the block label
* :class:`GenericChannel`  - any channel; x-independence is checked numerically
"""
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .channels import (Channel, ancilla_discard_channel, block_dephasing_channel,
                       block_measure_prepare_channel, check_projectors, classical_channel,
                       random_unitary_channel)
from .errors import DimensionError, ToleranceError, ValidationError
from .gce import divergence, gce
from .operators import (JORDAN, as_operator, commutator, dag, density, is_hermitian,
                        partial_trace, permutation_unitary, permute_subsystems,
                        subsystem_index_map, weighted_norm_sq)

GAP_TOL = 1e-8
INDEP_TOL = 1e-8
MAX_HAAR_N = 6


@dataclass(frozen=True, eq=False)
class FreqModel:
    grid: tuple
    states: tuple
    values: np.ndarray

    def __post_init__(self):
        states = tuple(density(s) for s in self.states)
        values = np.asarray(self.values, dtype=float).ravel()
        grid = tuple(self.grid) if self.grid is not None else tuple(range(len(states)))
        if not states:
            raise ValidationError("FreqModel grid is empty", module="rao-blackwell")
        if not (len(grid) == len(states) == values.size):
            raise ValidationError("grid/states/values lengths differ", module="rao-blackwell")
        if any(s.dim != states[0].dim for s in states):
            raise DimensionError("all states must share one dimension", module="rao-blackwell")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "grid", grid)

    @property
    def dim(self):
        return self.states[0].dim


def _hermitian_estimator(b, dim=None):
    b = as_operator(b, "estimator")
    if not is_hermitian(b, 1e-10 * max(1.0, np.abs(b).max())):
        raise ValidationError("estimator must be Hermitian", module="rao-blackwell")
    if dim is not None and b.shape[0] != dim:
        raise DimensionError(f"estimator dim {b.shape[0]} != state dim {dim}", module="rao-blackwell")
    return b


def local_mse(rho, b, value):
    """``||b - a I||^2_rho`` with the Jordan product."""
    b = as_operator(b)
    shifted = b - value * np.eye(b.shape[0])
    return weighted_norm_sq(JORDAN, rho, shifted)


def freq_mse_vector(states, values, b):
    return np.array([local_mse(s, b, v) for s, v in zip(states, values)])


def freq_mse(model, b):
    """Local MSE of a von Neumann measurement of ``b`` at every grid point."""
    b = _hermitian_estimator(b, model.dim)
    return freq_mse_vector(model.states, model.values, b)


# --------------------------------------------------------------------------
# Closed-form Rao-Blackwell estimators.
# --------------------------------------------------------------------------

def rb_ancilla(b, dim1, tau):
    """``tr_0[(I (x) tau) b]``: discard an independent ancilla in state ``tau``."""
    b = as_operator(b)
    tau = density(tau)
    if b.shape[0] != dim1 * tau.dim:
        raise DimensionError(f"estimator dim {b.shape[0]} != {dim1} x {tau.dim}", module="rao-blackwell")
    out = partial_trace(np.kron(np.eye(dim1), tau.matrix) @ b, [dim1, tau.dim], keep=[0])
    return 0.5 * (out + dag(out)) if is_hermitian(b) else out


def _check_distribution(weights, n):
    w = np.asarray(weights, dtype=float).ravel()
    if w.size != n or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValidationError("weights must be a probability vector matching the unitaries",
                              module="rao-blackwell")
    return w


def rb_symmetrize(b, unitaries, weights=None):
    """``sum_z mu_z U_z b U_z^dag``."""
    b = as_operator(b)
    us = [as_operator(u, "unitary") for u in unitaries]
    w = _check_distribution(np.full(len(us), 1 / len(us)) if weights is None else weights, len(us))
    return sum(wi * u @ b @ dag(u) for wi, u in zip(w, us))


def _n_subsystems(dim, d):
    n = round(math.log(dim) / math.log(d)) if d > 1 else 0
    if d ** n != dim:
        raise DimensionError(f"dim {dim} is not a power of subsystem dim {d}", module="rao-blackwell")
    return n


def rb_permutation_haar(b, n, subsystem_dim):
    """Average of ``U_pi b U_pi^dag`` over the full symmetric group ``S_n``."""
    b = as_operator(b)
    if n > MAX_HAAR_N:
        raise ValidationError(f"n! enumeration is capped at n = {MAX_HAAR_N}; use u_statistic",
                              module="rao-blackwell")
    if subsystem_dim ** n != b.shape[0]:
        raise DimensionError(f"estimator dim {b.shape[0]} != {subsystem_dim}**{n}", module="rao-blackwell")
    perms = list(itertools.permutations(range(n)))
    maps = np.array([subsystem_index_map(p, subsystem_dim) for p in perms])
    weights = np.full(len(perms), 1.0 / len(perms))
    return _kernels.permutation_average(b, maps, weights)


def u_statistic(c, c_prime, n, m, subsystem_dim=None):
    """Binomial average of ``C (x) C'`` over all ``m``-subsets of ``n`` subsystems.

    ``c`` acts on ``m`` subsystems and ``c_prime`` (``None`` for identity) on
    the remaining ``n - m``; both are symmetrized first.
    """
    c = as_operator(c)
    if m > n or m < 0:
        raise ValidationError(f"need 0 <= m <= n, got m={m}, n={n}", module="rao-blackwell")
    if m == 0:
        raise ValidationError("m must be at least 1", module="rao-blackwell")
    d = subsystem_dim or round(c.shape[0] ** (1.0 / m))
    if d ** m != c.shape[0]:
        raise DimensionError(f"C has dim {c.shape[0]}, not {d}**{m}", module="rao-blackwell")
    if c_prime is None:
        cp = np.eye(d ** (n - m), dtype=np.complex128)
    else:
        cp = as_operator(c_prime)
        if cp.shape[0] != d ** (n - m):
            raise DimensionError(f"C' has dim {cp.shape[0]}, not {d}**{n - m}", module="rao-blackwell")
        if n - m > 1:
            cp = rb_permutation_haar(cp, n - m, d) if n - m <= MAX_HAAR_N else cp
    if m > 1:
        c = rb_permutation_haar(c, m, d) if m <= MAX_HAAR_N else c
    combos = list(itertools.combinations(range(n), m))
    total = np.zeros((d ** n, d ** n), dtype=np.complex128)
    block = np.kron(c, cp)
    for k in combos:
        rest = [j for j in range(n) if j not in k]
        total += permute_subsystems(block, list(k) + rest, d)
    return total / len(combos)


def rb_direct_sum(b, projectors):
    """``sum_n P_n b P_n``."""
    b = as_operator(b)
    ps = check_projectors(projectors)
    if ps[0].shape[0] != b.shape[0]:
        raise DimensionError("projector and estimator dimensions differ", module="rao-blackwell")
    return sum(p @ b @ p for p in ps)


def rb_sinha(b, projectors, sigma_blocks):
    """``sum_s tr(sigma_s b) / tr(sigma_s) P_s`` for ``b`` commuting with every ``P_s``.

    ``sigma_blocks[s]`` is the x-independent PSD operator on block ``s``,
    given as a full-size matrix supported on ``P_s``.
    """
    b = as_operator(b)
    ps = check_projectors(projectors)
    for i, p in enumerate(ps):
        if np.max(np.abs(commutator(b, p))) > 1e-10:
            raise ValidationError(f"estimator does not commute with projector {i}", module="rao-blackwell")
    if len(sigma_blocks) != len(ps):
        raise ValidationError("need one sigma block per projector", module="rao-blackwell")
    out = np.zeros_like(b)
    for i, (p, s) in enumerate(zip(ps, sigma_blocks)):
        s = as_operator(s, "sigma block")
        w = np.linalg.eigvalsh(0.5 * (s + dag(s)))
        if w[0] < -1e-10:
            raise ValidationError(f"sigma block {i} is not PSD", module="rao-blackwell")
        tr = np.trace(s).real
        if tr <= 1e-14:
            raise ValidationError(f"sigma block {i} has zero trace", module="rao-blackwell")
        out += (np.trace(s @ p @ b @ p) / tr) * p
    return out


# --------------------------------------------------------------------------
# Constructions: a channel plus its closed-form GCE.
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AncillaDiscard:
    dim1: int
    tau: object
    kind = "ancilla"

    def channel(self):
        return ancilla_discard_channel(self.dim1, density(self.tau).dim)

    def estimator(self, b, model=None):
        return rb_ancilla(b, self.dim1, self.tau)


@dataclass(frozen=True, eq=False)
class Symmetrize:
    unitaries: tuple
    weights: object = None
    kind = "symmetrize"

    def channel(self):
        return random_unitary_channel(self.unitaries, self.weights)

    def estimator(self, b, model=None):
        return rb_symmetrize(b, self.unitaries, self.weights)


@dataclass(frozen=True, eq=False)
class PermutationHaar:
    n: int
    subsystem_dim: int
    kind = "permutation"

    def channel(self):
        us = [permutation_unitary(p, self.subsystem_dim) for p in itertools.permutations(range(self.n))]
        return random_unitary_channel(us)

    def estimator(self, b, model=None):
        return rb_permutation_haar(b, self.n, self.subsystem_dim)


@dataclass(frozen=True, eq=False)
class DirectSum:
    projectors: tuple
    kind = "direct_sum"

    def channel(self):
        return block_dephasing_channel(self.projectors)

    def estimator(self, b, model=None):
        return rb_direct_sum(b, self.projectors)


@dataclass(frozen=True, eq=False)
class SinhaStatistic:
    projectors: tuple
    sigma_blocks: tuple
    kind = "sinha"

    def channel(self):
        return block_measure_prepare_channel(self.projectors)

    def estimator(self, b, model=None):
        return rb_sinha(b, self.projectors, self.sigma_blocks)


@dataclass(frozen=True, eq=False)
class GenericChannel:
    """Any channel; the GCE is computed per grid point and must agree across the grid."""

    ch: Channel
    tol: float = INDEP_TOL
    kind = "channel"

    def channel(self):
        return self.ch

    def estimator(self, b, model=None):
        if model is None:
            raise ValidationError("a generic channel needs the model to compute per-x GCEs",
                                  module="rao-blackwell")
        est, spread = x_independent_gce(model.states, self.ch, b)
        if spread > self.tol:
            raise ToleranceError(f"GCE depends on x (max pairwise Frobenius distance {spread:.3e} > "
                                 f"{self.tol:.1e}); not a valid Rao-Blackwell estimator", module="rao-blackwell")
        return est


def x_independent_gce(states, ch, b):
    """Per-state Jordan GCEs of ``b`` and their maximum pairwise Frobenius distance."""
    ests = [gce(JORDAN, s, ch, b).estimator for s in states]
    spread = 0.0
    for i in range(len(ests)):
        for j in range(i):
            spread = max(spread, float(np.linalg.norm(ests[i] - ests[j])))
    return ests[0], spread


@dataclass(frozen=True, eq=False)
class RbOutcome:
    original_mse: np.ndarray
    rb_mse: np.ndarray
    gap: np.ndarray
    estimator: np.ndarray
    divergence: np.ndarray = None


def rb_apply(model, b, construction, *, gap_tol=GAP_TOL, threads=None):
    """Evaluate an estimator and its Rao-Blackwellization over the grid.

    The gap at every point must equal the divergence between ``b`` and the
    Rao-Blackwell estimator; a mismatch raises :class:`ToleranceError`.
    """
    b = _hermitian_estimator(b, model.dim)
    ch = construction.channel()
    if ch.dim_in != model.dim:
        raise DimensionError(f"construction channel expects dim {ch.dim_in}, model has dim {model.dim}",
                             module="rao-blackwell")
    est = construction.estimator(b, model)

    def point(i):
        rho = model.states[i]
        before = local_mse(rho, b, model.values[i])
        after = local_mse(ch.apply(rho), est, model.values[i])
        div = divergence(JORDAN, rho, ch, b, est)
        return before, after, div

    from .parallel import ordered_map
    rows = ordered_map(point, range(len(model.states)), threads)
    original = np.array([r[0] for r in rows])
    rb = np.array([r[1] for r in rows])
    div = np.array([r[2] for r in rows])
    gap = original - rb
    bad = np.max(np.abs(gap - div))
    if bad > gap_tol:
        raise ToleranceError(f"Rao-Blackwell gap differs from divergence by {bad:.3e}", module="rao-blackwell")
    return RbOutcome(original, rb, gap, est, div)


def gce_residual(product, rho, ch, b, estimator):
    """Frobenius residual of ``E_{G rho}(est) = G(E_rho b)`` for a closed-form estimator."""
    from .operators import emap

    rho = density(rho)
    out = ch.apply(rho)
    return float(np.linalg.norm(emap(product, out, estimator) - ch.apply_op(emap(product, rho, b))))


# --------------------------------------------------------------------------
# Classical reduction.
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ClassicalRb:
    c: np.ndarray              # (z,) when x-independent, else (z, x)
    x_dependent: bool
    mse: np.ndarray
    mse_rb: np.ndarray
    gap: np.ndarray
    variation: float


def _stochastic_rows(p, name):
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or np.any(p < -1e-15) or np.max(np.abs(p.sum(axis=1) - 1.0)) > 1e-12:
        raise ValidationError(f"{name} must be row-stochastic within 1e-12", module="rao-blackwell")
    return p


def classical_rb(pyx, pzy, b, a, grid=None, tol=1e-9):
    """Classical Rao-Blackwellization of ``b(Y)`` through the statistic ``Z``.

    ``pyx[x, y] = P(y|x)``, ``pzy[y, z] = P(z|y)``.  ``c(z, x)`` is the
    conditional mean of ``b(Y)`` given ``Z = z`` and ``X = x``; it is a valid
    estimator only when it does not vary with ``x``.
    """
    pyx = _stochastic_rows(pyx, "P(y|x)")
    pzy = _stochastic_rows(pzy, "P(z|y)")
    b = np.asarray(b, dtype=float).ravel()
    a = np.asarray(a, dtype=float).ravel()
    if pyx.shape[1] != pzy.shape[0] or b.size != pyx.shape[1] or a.size != pyx.shape[0]:
        raise DimensionError("classical_rb: inconsistent shapes", module="rao-blackwell")
    table, pzx = _kernels.conditional_mean_table(pyx, pzy, b, 1e-300)
    variation = 0.0
    for z in range(table.shape[0]):
        col = table[z][np.isfinite(table[z])]
        if col.size:
            variation = max(variation, float(col.max() - col.min()))
    mse = ((b[None, :] - a[:, None]) ** 2 * pyx).sum(axis=1)
    x_dep = variation > tol
    if x_dep:
        return ClassicalRb(table, True, mse, None, None, variation)
    c = np.array([row[np.isfinite(row)][0] if np.any(np.isfinite(row)) else 0.0 for row in table])
    mse_rb = ((c[None, :] - a[:, None]) ** 2 * pzx.T).sum(axis=1)
    gap = (b ** 2 * pyx).sum(axis=1) - (c ** 2 * pzx.T).sum(axis=1)
    return ClassicalRb(c, False, mse, mse_rb, gap, variation)


def classical_as_quantum(pyx, pzy, b, a):
    """The same problem as diagonal operators, run through :func:`rb_apply`."""
    pyx = _stochastic_rows(pyx, "P(y|x)")
    pzy = _stochastic_rows(pzy, "P(z|y)")
    states = [np.diag(row).astype(complex) for row in pyx]
    model = FreqModel(None, states, a)
    ch = classical_channel(pzy)
    return rb_apply(model, np.diag(np.asarray(b, dtype=float)).astype(complex), GenericChannel(ch))
