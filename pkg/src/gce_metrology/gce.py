"""Generalized conditional expectations (GCEs) and the divergence calculus.

The GCE of ``a`` through channel ``F`` with prior ``sigma`` is any ``X`` on
the output space with ``E_{F sigma}(X) = F(E_sigma(a))``.  In the
eigenbasis of ``F sigma`` the vectorized E-map is diagonal, so the
least-squares (pseudoinverse) solution is an elementwise division with a
relative cutoff.  Entries whose coefficient falls below the cutoff are set
to zero; for the Jordan product this zeroes exactly the kernel-kernel
block of ``X``.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .channels import Channel, compose, identity_channel
from .errors import DimensionError, ToleranceError, ValidationError
from .operators import (JORDAN, ProductKind, as_operator, dag, density, emap,
                        emap_coefficients, hermitian_part, is_hermitian,
                        weighted_inner, weighted_norm_sq)

PINV_RTOL = 1e-12
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class GceResult:
    estimator: np.ndarray
    residual: float
    min_divergence: float
    product: ProductKind
    output_state: object = None

    def as_dict(self):
        return {"estimator": self.estimator, "residual": self.residual,
                "min_divergence": self.min_divergence, "product": self.product.value}


def solve_emap(product, rho, rhs, rtol=PINV_RTOL):
    """Minimum-norm solution ``X`` of ``E_rho(X) = rhs``."""
    rho = density(rho)
    rhs = as_operator(rhs)
    if rhs.shape[0] != rho.dim:
        raise DimensionError(f"rhs dim {rhs.shape[0]} does not match state dim {rho.dim}",
                             module="gce-engine")
    v = rho.eigenvectors
    # support is decided on the eigenvalues: a roundoff-level eigenvalue would
    # otherwise survive the ROOT coefficient sqrt(l_i l_j) cutoff
    lam = rho.eigenvalues
    lam = np.where(lam > rtol * lam.max(initial=0.0), lam, 0.0)
    coeff = emap_coefficients(product, lam)
    cmax = float(coeff.max(initial=0.0))
    r = dag(v) @ rhs @ v
    y = _kernels.masked_divide(r, coeff, rtol * cmax)
    return v @ y @ dag(v)


def gce(product, sigma, ch, a, *, tol=RESIDUAL_TOL, hermitize=None):
    """GCE of ``a`` through ``ch`` with prior ``sigma``.

    Raises :class:`ToleranceError` if the defining equation cannot be met
    to ``tol`` in Frobenius norm.
    """
    product = ProductKind.parse(product)
    sigma = density(sigma)
    a = as_operator(a, "observable")
    if a.shape[0] != ch.dim_in or sigma.dim != ch.dim_in:
        raise DimensionError(f"gce: channel '{ch.label}' has input dim {ch.dim_in}, "
                             f"state dim {sigma.dim}, observable dim {a.shape[0]}", module="gce-engine")
    out_state = ch.apply(sigma)
    rhs = ch.apply_op(emap(product, sigma, a))
    x = solve_emap(product, out_state, rhs)
    if hermitize is None:
        hermitize = product is JORDAN and is_hermitian(a, 1e-12 * max(1.0, np.abs(a).max()))
    if hermitize:
        x = hermitian_part(x)
    residual = float(np.linalg.norm(emap(product, out_state, x) - rhs))
    if residual > tol:
        raise ToleranceError(f"GCE defining equation residual {residual:.3e} exceeds {tol:.1e} "
                             f"(inconsistent or ill-posed instance)", module="gce-engine")
    dmin = weighted_norm_sq(product, sigma, a) - weighted_inner(product, out_state, x, x).real
    return GceResult(x, residual, float(dmin), product, out_state)


def divergence(product, sigma, ch, a, b):
    """``||a||^2_sigma - 2 Re <F* b, a>_sigma + ||b||^2_{F sigma}``."""
    sigma = density(sigma)
    a = as_operator(a)
    b = as_operator(b)
    if a.shape[0] != ch.dim_in or b.shape[0] != ch.dim_out:
        raise DimensionError(f"divergence: expected a of dim {ch.dim_in} and b of dim {ch.dim_out}",
                             module="gce-engine")
    out_state = ch.apply(sigma)
    return float(weighted_inner(product, sigma, a, a).real
                 - 2.0 * weighted_inner(product, sigma, ch.adjoint_apply(b), a).real
                 + weighted_inner(product, out_state, b, b).real)


def predict(product, sigma, ch, b):
    """Optimal prediction of output observable ``b``: the Heisenberg-picture ``F* b``."""
    b = as_operator(b)
    return ch.adjoint_apply(b)


def gce_map_matrix(product, sigma, ch):
    """Matrix of the linear map ``a -> F_* a`` on row-major vectorized operators."""
    sigma = density(sigma)
    d_in, d_out = ch.dim_in, ch.dim_out
    out_state = ch.apply(sigma)
    cols = np.empty((d_out * d_out, d_in * d_in), dtype=np.complex128)
    for k in range(d_in * d_in):
        e = np.zeros(d_in * d_in, dtype=np.complex128)
        e[k] = 1.0
        e = e.reshape(d_in, d_in)
        rhs = ch.apply_op(emap(product, sigma, e))
        cols[:, k] = solve_emap(product, out_state, rhs).ravel()
    return cols


def predict_residual(product, sigma, ch, b):
    """``|| E_sigma(F* b) - (F_*)^* E_{F sigma}(b) ||_F`` for the adjoint relation."""
    sigma = density(sigma)
    b = as_operator(b)
    lhs = emap(product, sigma, predict(product, sigma, ch, b))
    m = gce_map_matrix(product, sigma, ch)
    rhs = (dag(m) @ emap(product, ch.apply(sigma), b).ravel()).reshape(ch.dim_in, ch.dim_in)
    return float(np.linalg.norm(lhs - rhs))


def chain_gce(product, sigma, chain, a):
    """Propagate ``a`` through a chain of channels, one GCE per link.

    ``result[n]`` is the GCE of ``result[n-1].estimator`` with prior equal
    to the state after the first ``n`` channels.
    """
    chain = list(chain)
    if not chain:
        raise ValidationError("chain_gce needs at least one channel", module="gce-engine")
    state = density(sigma)
    cur = as_operator(a)
    out = []
    for n, ch in enumerate(chain):
        if ch.dim_in != state.dim:
            raise DimensionError(f"chain link {n} ('{ch.label}') expects dim {ch.dim_in}, "
                                 f"got {state.dim}", module="gce-engine")
        res = gce(product, state, ch, cur)
        out.append(res)
        state = res.output_state
        cur = res.estimator
    return out


def pythagoras_check(product, sigma, f, g, a):
    """Return ``(lhs, rhs, gap)`` for the additivity of minimum divergences.

    ``lhs`` is the minimum divergence through ``g o f``; ``rhs`` is the sum
    of the two stagewise minimum divergences.
    """
    gf = compose(g, f)
    lhs = gce(product, sigma, gf, a).min_divergence
    first, second = chain_gce(product, sigma, [f, g], a)
    rhs = first.min_divergence + second.min_divergence
    return lhs, rhs, abs(lhs - rhs)


def weighted_distance(product, rho, x, y):
    """Distance between two representatives in the ``rho``-weighted norm."""
    return float(np.sqrt(max(weighted_norm_sq(product, rho, as_operator(x) - as_operator(y)), 0.0)))


def chain_rule_gap(product, sigma, chain, a):
    """Weighted-norm gap between chained GCEs and the single-shot composed GCE."""
    results = chain_gce(product, sigma, chain, a)
    composed = chain[0]
    for ch in chain[1:]:
        composed = compose(ch, composed)
    direct = gce(product, sigma, composed, a)
    return weighted_distance(product, direct.output_state, results[-1].estimator, direct.estimator)


__all__ = ["GceResult", "gce", "divergence", "predict", "predict_residual", "gce_map_matrix",
           "chain_gce", "pythagoras_check", "chain_rule_gap", "solve_emap", "weighted_distance",
           "identity_channel", "Channel"]
