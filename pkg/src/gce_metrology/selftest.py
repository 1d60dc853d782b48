"""Randomized invariant suite behind ``gce-metrology selftest``.

Every check reports its worst observed value against a fixed tolerance.
Instances come from one seeded generator, so a run is reproducible.
"""
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .gce import chain_rule_gap, divergence, gce, pythagoras_check
from .gaussian import GaussianChannel, GaussianState, classical_lg_oracle, gauss_gce
from .operators import JORDAN, LEFT, ROOT, weighted_norm_sq
from .rao_blackwell import (AncillaDiscard, DirectSum, FreqModel, PermutationHaar, SinhaStatistic,
                            rb_apply, rb_permutation_haar, u_statistic)
from .testing import (block_operator, block_state, random_channel, random_density, random_hermitian,
                      random_operator, random_projectors, rng_of)

PRODUCTS = (JORDAN, LEFT, ROOT)


@dataclass
class Check:
    name: str
    tol: float
    worst: float = 0.0
    count: int = 0
    lower: bool = False  # True when the value must stay above -tol

    def record(self, value):
        self.count += 1
        value = float(value)
        if self.lower:
            self.worst = min(self.worst, value) if self.count > 1 else value
        else:
            self.worst = max(self.worst, value)

    @property
    def passed(self):
        if self.count == 0:
            return False
        return self.worst >= -self.tol if self.lower else self.worst < self.tol

    def as_dict(self):
        return {"name": self.name, "instances": self.count, "worst": self.worst,
                "tolerance": self.tol, "passed": self.passed}


def theorem_instance(rng, max_dim=6):
    """``(product, sigma, f, g, a)`` with dims in ``[2, max_dim]``."""
    product = PRODUCTS[int(rng.integers(len(PRODUCTS)))]
    d0, d1, d2 = (int(v) for v in rng.integers(2, max_dim + 1, size=3))
    rank = None if rng.random() < 0.7 else int(rng.integers(1, d0 + 1))
    sigma = random_density(d0, rng, rank)
    f = random_channel(d0, d1, rng, int(rng.integers(1, 4)))
    g = random_channel(d1, d2, rng, int(rng.integers(1, 4)))
    a = random_hermitian(d0, rng) if product is JORDAN else random_operator(d0, rng)
    return product, sigma, f, g, a


def theorem_checks(instances=200, seed=0, max_dim=6):
    """Chain rule, Pythagoras, monotonicity, bias preservation and the bias-variance split on random instances."""
    rng = rng_of(seed)
    checks = {
        "chain_rule": Check("chain rule gap", 1e-8),
        "pythagoras": Check("Pythagorean gap", 1e-8),
        "monotonicity": Check("monotonicity margin", 1e-9, lower=True),
        "bias": Check("bias preservation", 1e-10),
        "decomposition": Check("bias-variance decomposition gap", 1e-9),
        "nonnegativity": Check("JORDAN divergence", 1e-9, lower=True),
    }
    for _ in range(instances):
        product, sigma, f, g, a = theorem_instance(rng, max_dim)
        checks["chain_rule"].record(chain_rule_gap(product, sigma, [f, g], a))
        lhs, rhs, gap = pythagoras_check(product, sigma, f, g, a)
        checks["pythagoras"].record(gap)
        first = gce(product, sigma, f, a)
        checks["monotonicity"].record(lhs - first.min_divergence)
        scale = max(1.0, abs(np.trace(sigma.matrix @ a)))
        checks["bias"].record(abs(np.trace(sigma.matrix @ a) - np.trace(first.output_state.matrix @ first.estimator))
                              / scale)
        c = complex(rng.standard_normal(), rng.standard_normal() if product is not JORDAN else 0.0)
        eye0, eye1 = np.eye(sigma.dim), np.eye(f.dim_out)
        left = weighted_norm_sq(product, sigma, a - c * eye0)
        right = weighted_norm_sq(product, first.output_state, first.estimator - c * eye1) + first.min_divergence
        checks["decomposition"].record(abs(left - right))
        if product is JORDAN:
            b = random_hermitian(f.dim_out, rng)
            checks["nonnegativity"].record(divergence(JORDAN, sigma, f, a, b))
    return list(checks.values())


# --------------------------------------------------------------------------
# Rao-Blackwell constructions.
# --------------------------------------------------------------------------

def _ancilla_case(rng):
    d1, d0 = int(rng.integers(2, 4)), int(rng.integers(2, 3))
    tau = random_density(d0, rng)
    states = [np.kron(random_density(d1, rng).matrix, tau.matrix) for _ in range(int(rng.integers(2, 5)))]
    return AncillaDiscard(d1, tau), states


def _permutation_case(rng):
    n = int(rng.integers(2, 4))
    states = []
    for _ in range(int(rng.integers(2, 4))):
        s = random_density(2, rng).matrix
        full = s
        for _ in range(n - 1):
            full = np.kron(full, s)
        states.append(full)
    return PermutationHaar(n, 2), states


def _direct_sum_case(rng):
    d = int(rng.integers(2, 6))
    ps = random_projectors(d, rng)
    return DirectSum(tuple(ps)), [block_state(ps, rng).matrix for _ in range(int(rng.integers(2, 5)))]


def _sinha_case(rng):
    d = int(rng.integers(2, 6))
    ps = random_projectors(d, rng)
    blocks = []
    for p in ps:
        g = random_operator(d, rng)
        blk = p @ g @ g.conj().T @ p
        blocks.append(blk / np.trace(blk).real)
    states = []
    for _ in range(int(rng.integers(2, 5))):
        w = rng.dirichlet(np.ones(len(ps)))
        states.append(sum(wi * b for wi, b in zip(w, blocks)))
    return SinhaStatistic(tuple(ps), tuple(blocks)), states


RB_CASES = {"ancilla": _ancilla_case, "permutation": _permutation_case,
            "direct_sum": _direct_sum_case, "sinha": _sinha_case}


def rb_instance(kind, rng):
    """``(construction, model, b)`` for one of the four constructions."""
    construction, states = RB_CASES[kind](rng)
    d = states[0].shape[0]
    if kind == "sinha":
        b = block_operator(list(construction.projectors), rng)
    else:
        b = random_hermitian(d, rng)
    values = rng.standard_normal(len(states))
    return construction, FreqModel(None, states, values), b


def rb_checks(instances=100, seed=1):
    rng = rng_of(seed)
    checks = {"domination": Check("Rao-Blackwell domination margin", 1e-9, lower=True),
              "gap": Check("gap minus divergence", 1e-8)}
    kinds = list(RB_CASES)
    for i in range(instances):
        construction, model, b = rb_instance(kinds[i % len(kinds)], rng)
        out = rb_apply(model, b, construction, gap_tol=np.inf)
        checks["domination"].record(np.min(out.original_mse - out.rb_mse))
        checks["gap"].record(np.max(np.abs(out.gap - out.divergence)))
    return list(checks.values())


# --------------------------------------------------------------------------
# Other modules.
# --------------------------------------------------------------------------

def gaussian_instance(rng, max_modes=4):
    s, t = (int(v) for v in rng.integers(1, max_modes + 1, size=2))
    g = rng.standard_normal((2 * s, 2 * s))
    sigma = g @ g.T + 0.1 * np.eye(2 * s)
    h = rng.standard_normal((2 * t, 2 * t))
    R = h @ h.T + 0.1 * np.eye(2 * t)
    F = rng.standard_normal((2 * t, 2 * s))
    return (rng.standard_normal(2 * s), sigma, F, rng.standard_normal(2 * t), R, rng.standard_normal(2 * s))


def gaussian_checks(instances=100, seed=2):
    rng = rng_of(seed)
    coeff = Check("Gaussian coefficients vs oracle", 1e-10)
    div = Check("Gaussian divergence vs oracle", 1e-10)
    for _ in range(instances):
        m, S, F, l, R, u = gaussian_instance(rng)
        res = gauss_gce(GaussianState(m, S), GaussianChannel(F, l, R), u)
        oc, off, omse = classical_lg_oracle(m, S, F, l, R, u)
        scale = max(1.0, np.abs(oc).max(), abs(off))
        coeff.record(max(np.max(np.abs(res.coefficients - oc)), abs(res.offset - off)) / scale)
        div.record(abs(res.divergence - omse) / max(1.0, omse))
    return [coeff, div]


def ustat_checks(seed=3, max_n=5):
    rng = rng_of(seed)
    chk = Check("U-statistic vs full Haar symmetrization", 1e-12)
    for n in range(2, max_n + 1):
        for m in range(1, n + 1):
            c = random_hermitian(2 ** m, rng)
            cp = random_hermitian(2 ** (n - m), rng) if m < n else None
            direct = np.kron(c, cp) if cp is not None else c
            full = rb_permutation_haar(direct, n, 2)
            chk.record(np.max(np.abs(u_statistic(c, cp, n, m, 2) - full)))
    return [chk]


def kernel_checks(seed=4):
    rng = rng_of(seed)
    chk = Check("numba and numpy kernels agree", 1e-12)
    if not _kernels.HAVE_NUMBA:
        return []
    b = random_operator(8, rng)
    from .operators import subsystem_index_map
    import itertools
    maps = np.array([subsystem_index_map(p, 2) for p in itertools.permutations(range(3))])
    w = np.full(len(maps), 1 / len(maps))
    chk.record(np.max(np.abs(_kernels.permutation_average_numpy(b, maps, w)
                             - _kernels.permutation_average_numba(b, maps, w))))
    coeff = rng.random((6, 6))
    rhs = random_operator(6, rng)
    chk.record(np.max(np.abs(_kernels.masked_divide_numpy(rhs, coeff, 0.1)
                             - _kernels.masked_divide_numba(rhs, coeff, 0.1))))
    return [chk]


def run_selftest(instances=50, seed=0, max_dim=6):
    """Run every invariant family; returns a JSON-ready report."""
    t0 = time.perf_counter()
    checks = []
    checks += theorem_checks(instances, seed, max_dim)
    checks += rb_checks(max(4, instances // 2), seed + 1)
    checks += gaussian_checks(instances, seed + 2)
    checks += ustat_checks(seed + 3)
    checks += kernel_checks(seed + 4)
    return {"passed": all(c.passed for c in checks), "backend": _kernels.BACKEND,
            "checks": [c.as_dict() for c in checks], "seconds": time.perf_counter() - t0}


__all__ = ["Check", "run_selftest", "theorem_checks", "rb_checks", "gaussian_checks", "ustat_checks",
           "theorem_instance", "rb_instance", "gaussian_instance"]
