"""CPTP maps in Kraus form and the named constructors used throughout.

A :class:`Channel` stores its Kraus operators as a stacked array of shape
``(k, dim_out, dim_in)``.  ``apply`` acts on density operators,
``apply_op`` on arbitrary operators, and ``adjoint_apply`` is the
Hilbert-Schmidt adjoint (Heisenberg picture).
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .operators import (DensityOperator, as_operator, dag, density, is_hermitian)

TP_TOL = 1e-10
KRAUS_DROP = 1e-14


@dataclass(frozen=True, eq=False)
class Channel:
    kraus: np.ndarray
    label: str = "kraus"

    def __post_init__(self):
        k = np.asarray(self.kraus, dtype=np.complex128)
        if k.ndim == 2:
            k = k[None]
        if k.ndim != 3 or k.shape[0] == 0:
            raise ValidationError("a channel needs at least one Kraus operator of shape (dim_out, dim_in)",
                                  module="channels")
        object.__setattr__(self, "kraus", k)
        tp = np.einsum("kji,kjl->il", k.conj(), k)
        err = np.max(np.abs(tp - np.eye(k.shape[2])))
        if err > TP_TOL:
            raise ValidationError(f"Kraus operators are not trace preserving "
                                  f"(max |sum K^dag K - I| = {err:.3e})", module="channels")

    @property
    def dim_in(self):
        return self.kraus.shape[2]

    @property
    def dim_out(self):
        return self.kraus.shape[1]

    def _check_in(self, a):
        if a.shape[0] != self.dim_in:
            raise DimensionError(f"channel '{self.label}' expects input dim {self.dim_in}, got {a.shape[0]}",
                                 module="channels")

    def apply_op(self, a):
        """``sum_k K a K^dag`` for an arbitrary input operator."""
        a = as_operator(a)
        self._check_in(a)
        k = self.kraus
        return np.einsum("kij,jl,kml->im", k, a, k.conj())

    def apply(self, rho):
        rho = density(rho)
        out = self.apply_op(rho.matrix)
        return DensityOperator.from_matrix(out, trace_tol=1e-9)

    def adjoint_apply(self, b):
        b = as_operator(b)
        if b.shape[0] != self.dim_out:
            raise DimensionError(f"channel '{self.label}' adjoint expects dim {self.dim_out}, got {b.shape[0]}",
                                 module="channels")
        k = self.kraus
        return np.einsum("kji,jl,klm->im", k.conj(), b, k)

    __call__ = apply

    def choi(self):
        """Choi matrix ``sum_ij |i><j| (x) F(|i><j|)`` (input factor first)."""
        k = self.kraus
        vecs = k.transpose(0, 2, 1).reshape(k.shape[0], -1)  # row index = (i, out)
        return vecs.T @ vecs.conj()


def apply(ch, rho):
    return ch.apply(rho)


def adjoint_apply(ch, b):
    return ch.adjoint_apply(b)


def _minimal_kraus(kraus, label):
    """Re-derive a minimal Kraus set from the Choi matrix."""
    ch = Channel(kraus, label)
    j = ch.choi()
    w, v = np.linalg.eigh(0.5 * (j + dag(j)))
    keep = w > KRAUS_DROP * max(1.0, w[-1])
    d_in, d_out = ch.dim_in, ch.dim_out
    ks = []
    for lam, vec in zip(w[keep], v[:, keep].T):
        ks.append(np.sqrt(lam) * vec.reshape(d_in, d_out).T)
    return np.array(ks)


def compose(g, f, label=None):
    """The channel ``g o f`` (apply ``f`` first)."""
    if f.dim_out != g.dim_in:
        raise DimensionError(f"cannot compose: '{f.label}' outputs dim {f.dim_out} but "
                             f"'{g.label}' takes dim {g.dim_in}", module="channels")
    prods = np.einsum("aij,bjk->abik", g.kraus, f.kraus).reshape(-1, g.dim_out, f.dim_in)
    norms = np.linalg.norm(prods.reshape(prods.shape[0], -1), axis=1)
    prods = prods[norms >= KRAUS_DROP]
    if prods.shape[0] == 0:
        raise ValidationError("composition produced no Kraus operators", module="channels")
    label = label or f"{g.label}*{f.label}"
    if prods.shape[0] > f.dim_in * g.dim_out:
        prods = _minimal_kraus(prods, label)
    return Channel(prods, label)


def compose_chain(chain):
    """Compose ``[F1, F2, ..., FN]`` into ``FN ... F2 F1``."""
    chain = list(chain)
    if not chain:
        raise ValidationError("empty channel chain", module="channels")
    out = chain[0]
    for ch in chain[1:]:
        out = compose(ch, out)
    return out


# --------------------------------------------------------------------------
# Named constructors.
# --------------------------------------------------------------------------

def kraus_channel(kraus, label="kraus"):
    return Channel(np.asarray(kraus, dtype=np.complex128), label)


def identity_channel(d):
    return Channel(np.eye(d, dtype=np.complex128)[None], f"identity({d})")


def unitary_channel(u, label="unitary"):
    u = as_operator(u, "unitary")
    if np.max(np.abs(u @ dag(u) - np.eye(u.shape[0]))) > 1e-10:
        raise ValidationError("unitary_channel: matrix is not unitary", module="channels")
    return Channel(u[None], label)


def depolarizing_channel(d):
    """Completely depolarizing channel: every state goes to ``I/d``."""
    ks = np.zeros((d * d, d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            ks[i * d + j, i, j] = 1.0 / np.sqrt(d)
    return Channel(ks, f"depolarizing({d})")


def _psd_factors(m, name):
    """``m = sum_k v_k v_k^dag`` via the eigendecomposition of a PSD matrix."""
    m = as_operator(m, name)
    if not is_hermitian(m, 1e-10):
        raise ValidationError(f"{name} is not Hermitian", module="channels")
    w, v = np.linalg.eigh(0.5 * (m + dag(m)))
    if w[0] < -1e-10:
        raise ValidationError(f"{name} is not positive semidefinite (eigenvalue {w[0]:.3e})",
                              module="channels")
    keep = w > 1e-15
    return [np.sqrt(l) * v[:, k] for k, l in zip(np.flatnonzero(keep), w[keep])]


def cq_channel(states):
    """Classical-quantum channel ``sigma -> sum_x <x|sigma|x> rho_x``.

    Off-diagonal input coherences are dephased, which makes the map CPTP
    on the whole input space.
    """
    states = [density(s) for s in states]
    if not states:
        raise ValidationError("cq_channel needs at least one state", module="channels")
    d_out = states[0].dim
    if any(s.dim != d_out for s in states):
        raise DimensionError("cq_channel states must share one dimension", module="channels")
    n = len(states)
    ks = []
    for x, s in enumerate(states):
        for vec in _psd_factors(s.matrix, f"state {x}"):
            k = np.zeros((d_out, n), dtype=np.complex128)
            k[:, x] = vec
            ks.append(k)
    return Channel(np.array(ks), "cq")


def measurement_channel(povm):
    """Quantum-classical channel ``tau -> sum_y tr(M_y tau) |y><y|``."""
    povm = [as_operator(m, "POVM element") for m in povm]
    if not povm:
        raise ValidationError("empty POVM", module="channels")
    d = povm[0].shape[0]
    if any(m.shape[0] != d for m in povm):
        raise DimensionError("POVM elements must share one dimension", module="channels")
    total = sum(povm)
    err = np.max(np.abs(total - np.eye(d)))
    if err > 1e-10:
        raise ValidationError(f"POVM elements do not sum to identity (max deviation {err:.3e})",
                              module="channels")
    n = len(povm)
    ks = []
    for y, m in enumerate(povm):
        for vec in _psd_factors(m, f"POVM element {y}"):
            k = np.zeros((n, d), dtype=np.complex128)
            k[y, :] = vec.conj()
            ks.append(k)
    return Channel(np.array(ks), "measurement")


def ancilla_discard_channel(dim1, dim0):
    """Partial trace over the second (ancilla) factor of ``H1 (x) H0``."""
    ks = np.zeros((dim0, dim1, dim1 * dim0), dtype=np.complex128)
    eye = np.eye(dim1)
    for j in range(dim0):
        bra = np.zeros((1, dim0))
        bra[0, j] = 1.0
        ks[j] = np.kron(eye, bra)
    return Channel(ks, f"ancilla_discard({dim1},{dim0})")


def _check_weights(weights, n):
    w = np.asarray(weights, dtype=float).ravel()
    if w.size != n:
        raise ValidationError(f"expected {n} weights, got {w.size}", module="channels")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValidationError("weights must be nonnegative and sum to 1", module="channels")
    return w


def random_unitary_channel(unitaries, weights=None):
    us = [as_operator(u, "unitary") for u in unitaries]
    if not us:
        raise ValidationError("random_unitary_channel needs at least one unitary", module="channels")
    w = _check_weights(np.full(len(us), 1.0 / len(us)) if weights is None else weights, len(us))
    for u in us:
        if np.max(np.abs(u @ dag(u) - np.eye(u.shape[0]))) > 1e-10:
            raise ValidationError("random_unitary_channel: matrix is not unitary", module="channels")
    ks = np.array([np.sqrt(wi) * u for wi, u in zip(w, us) if wi > 0])
    return Channel(ks, "random_unitary")


def check_projectors(projectors, tol=1e-10):
    ps = [as_operator(p, "projector") for p in projectors]
    if not ps:
        raise ValidationError("need at least one projector", module="channels")
    d = ps[0].shape[0]
    for i, p in enumerate(ps):
        if p.shape[0] != d:
            raise DimensionError("projectors must share one dimension", module="channels")
        if np.max(np.abs(p @ p - p)) > tol or not is_hermitian(p, tol):
            raise ValidationError(f"projector {i} is not a Hermitian idempotent", module="channels")
        for j in range(i):
            if np.max(np.abs(p @ ps[j])) > tol:
                raise ValidationError(f"projectors {j} and {i} are not orthogonal", module="channels")
    if np.max(np.abs(sum(ps) - np.eye(d))) > tol:
        raise ValidationError("projectors do not sum to identity", module="channels")
    return ps


def block_dephasing_channel(projectors):
    """``rho -> sum_n P_n rho P_n`` for an orthogonal resolution of identity."""
    ps = check_projectors(projectors)
    return Channel(np.array(ps), "block_dephasing")


def block_measure_prepare_channel(projectors):
    """Measure which block ``P_s`` the state is in, then prepare ``P_s / rank(P_s)``.

    This is the trace-preserving form of measuring a sufficient-statistic
    observable while staying on the sensor space.
    """
    ps = check_projectors(projectors)
    ks = []
    for p in ps:
        w, v = np.linalg.eigh(p)
        basis = v[:, w > 0.5]
        r = basis.shape[1]
        for i in range(r):
            for j in range(r):
                ks.append(np.outer(basis[:, i], basis[:, j].conj()) / np.sqrt(r))
    return Channel(np.array(ks), "block_measure_prepare")


def classical_channel(transition):
    """Stochastic matrix ``P[y, z] = P(z|y)`` as a diagonal-to-diagonal channel."""
    t = np.asarray(transition, dtype=float)
    if t.ndim != 2 or np.any(t < -1e-15) or np.max(np.abs(t.sum(axis=1) - 1.0)) > 1e-12:
        raise ValidationError("transition matrix must have nonnegative rows summing to 1",
                              module="channels")
    ny, nz = t.shape
    ks = []
    for y in range(ny):
        for z in range(nz):
            if t[y, z] > 0:
                k = np.zeros((nz, ny), dtype=np.complex128)
                k[z, y] = np.sqrt(t[y, z])
                ks.append(k)
    return Channel(np.array(ks), "classical")
