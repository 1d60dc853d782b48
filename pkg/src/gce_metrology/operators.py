"""Dense operator arithmetic, E-map products and weighted inner products.

Operators are plain square ``numpy`` arrays (complex128).  Density
operators are wrapped in :class:`DensityOperator`, which caches the
eigendecomposition used for matrix square roots and for the GCE solver.
"""
import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from .errors import DimensionError, ValidationError

HERMITIAN_TOL = 1e-12
PSD_CLAMP = 1e-12
TRACE_TOL = 1e-9
MERGE_TOL = 1e-9
EIG_FLOOR = 64 * np.finfo(float).eps


class ProductKind(str, enum.Enum):
    """Operator ordering used by the E-map."""

    JORDAN = "jordan"
    LEFT = "left"
    ROOT = "root"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"unknown product kind {value!r}; expected one of "
                                  f"{[p.value for p in cls]}", module="operator-core") from None


JORDAN = ProductKind.JORDAN
LEFT = ProductKind.LEFT
ROOT = ProductKind.ROOT


def as_operator(a, name="operator"):
    """Coerce to a square complex matrix."""
    if isinstance(a, DensityOperator):
        return a.matrix
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {arr.shape}",
                             module="operator-core")
    return arr


def dag(a):
    return np.conjugate(np.swapaxes(a, -1, -2))


def hermitian_part(a):
    return 0.5 * (a + dag(a))


def is_hermitian(a, tol=1e-10):
    a = np.asarray(a)
    return a.shape[0] == a.shape[1] and bool(np.max(np.abs(a - dag(a)), initial=0.0) <= tol)


def commutator(a, b):
    return a @ b - b @ a


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A positive-semidefinite, unit-trace operator with cached spectrum.

    Eigenvalues in ``[-1e-12, 0)`` and positive ones at the eigensolver
    noise floor are clamped to zero and the state is renormalized; anything
    more negative is rejected.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @classmethod
    def from_matrix(cls, rho, *, renormalize=True, trace_tol=TRACE_TOL):
        rho = as_operator(rho, "density operator")
        dev = np.max(np.abs(rho - dag(rho)), initial=0.0)
        scale = max(1.0, float(np.max(np.abs(rho), initial=0.0)))
        if dev > 1e-10 * scale:
            raise ValidationError(f"density operator is not Hermitian (max deviation {dev:.3e})",
                                  module="operator-core")
        rho = hermitian_part(rho)
        w, v = np.linalg.eigh(rho)
        if w.size and w[0] < -PSD_CLAMP:
            raise ValidationError(f"density operator has negative eigenvalue {w[0]:.3e}",
                                  module="operator-core")
        # eigenvalues at the eigensolver noise floor are exact zeros; left in,
        # sqrt(1e-16) = 1e-8 leaks into ROOT products on the kernel
        floor = EIG_FLOOR * max(float(np.max(np.abs(w), initial=0.0)), 0.0)
        w = np.where(w > floor, w, 0.0)
        tr = float(w.sum())
        if abs(tr - 1.0) > trace_tol:
            if not renormalize or tr <= 0.0:
                raise ValidationError(f"density operator trace is {tr!r}, expected 1",
                                      module="operator-core")
        w = w / tr
        order = np.argsort(w)[::-1]
        w, v = w[order], v[:, order]
        mat = (v * w) @ dag(v)
        mat = hermitian_part(mat)
        return cls(mat, w, v)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def support_rank(self):
        if self.eigenvalues.size == 0:
            return 0
        return int(np.sum(self.eigenvalues > PSD_CLAMP * self.eigenvalues[0]))

    def sqrt(self):
        return (self.eigenvectors * np.sqrt(self.eigenvalues)) @ dag(self.eigenvectors)

    def expect(self, a):
        return complex(np.trace(self.matrix @ as_operator(a)))

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def density(rho, **kwargs):
    """Return ``rho`` as a :class:`DensityOperator` (no-op if it already is one)."""
    if isinstance(rho, DensityOperator):
        return rho
    return DensityOperator.from_matrix(rho, **kwargs)


def maximally_mixed(d):
    return density(np.eye(d) / d)


def pure_state(psi):
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    psi = psi / np.linalg.norm(psi)
    return density(np.outer(psi, psi.conj()))


def _check_same_dim(rho, a, where):
    if rho.dim != a.shape[0]:
        raise DimensionError(f"{where}: state has dim {rho.dim} but operator has dim {a.shape[0]}",
                             module="operator-core")


def emap(product, rho, a):
    """Apply the E-map ``E_rho`` of the given product to ``a``.

    JORDAN gives ``(rho a + a rho)/2``, LEFT gives ``rho a`` and ROOT
    gives ``sqrt(rho) a sqrt(rho)``.
    """
    product = ProductKind.parse(product)
    rho = density(rho)
    a = as_operator(a)
    _check_same_dim(rho, a, "emap")
    r = rho.matrix
    if product is JORDAN:
        return 0.5 * (r @ a + a @ r)
    if product is LEFT:
        return r @ a
    s = rho.sqrt()
    return s @ a @ s


def weighted_inner(product, rho, b, a):
    """``<b, a>_rho = tr(b^dagger E_rho a)``."""
    b = as_operator(b)
    return complex(np.vdot(b, emap(product, rho, a)))


def weighted_norm_sq(product, rho, a):
    val = weighted_inner(product, rho, a, a).real
    return max(val, 0.0) if val > -1e-12 else val


def emap_coefficients(product, eigenvalues):
    """Eigenbasis coefficients c_ij with ``(V^dag E_rho(X) V)_ij = c_ij (V^dag X V)_ij``."""
    product = ProductKind.parse(product)
    lam = np.asarray(eigenvalues, dtype=float)
    if product is JORDAN:
        return 0.5 * (lam[:, None] + lam[None, :])
    if product is LEFT:
        return np.repeat(lam[:, None], lam.size, axis=1)
    s = np.sqrt(lam)
    return s[:, None] * s[None, :]


# --------------------------------------------------------------------------
# Structure: tensor products, direct sums, partial traces.
# --------------------------------------------------------------------------

def tensor(*ops):
    out = np.ones((1, 1), dtype=np.complex128)
    for op in ops:
        out = np.kron(out, as_operator(op))
    return out


def direct_sum(blocks):
    if len(blocks) == 0:
        raise DimensionError("direct_sum needs at least one block", module="operator-core")
    return block_diag(*[as_operator(b) for b in blocks]).astype(np.complex128)


def partial_trace(a, dims, keep):
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` lists the subsystem dimensions in tensor order; the kept
    subsystems stay in their original relative order.
    """
    a = as_operator(a)
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != a.shape[0]:
        raise DimensionError(f"subsystem dims {dims} do not multiply to {a.shape[0]}",
                             module="operator-core")
    keep = sorted({int(k) for k in np.atleast_1d(keep)})
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {len(dims)} subsystems",
                             module="operator-core")
    n = len(dims)
    t = a.reshape(dims + dims)
    traced = [k for k in range(n) if k not in keep]
    # contract traced subsystems one at a time, highest index first
    for k in sorted(traced, reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + m)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(dk, dk)


def subsystem_index_map(perm, d):
    """Index map of the permutation unitary acting on ``len(perm)`` qudits.

    Returns ``p`` with ``(U B U^dag)[r, c] = B[p[r], p[c]]`` where ``U``
    sends subsystem ``j`` to position ``perm[j]``.
    """
    n = len(perm)
    # new axis perm[j] carries old axis j  ->  transpose by the inverse permutation
    inv = np.argsort(perm)
    idx = np.arange(d ** n).reshape((d,) * n)
    return np.ascontiguousarray(idx.transpose(inv).ravel())


def permute_subsystems(b, perm, d):
    """Conjugate ``b`` by the unitary that moves subsystem ``j`` to slot ``perm[j]``."""
    b = as_operator(b)
    p = subsystem_index_map(perm, d)
    if p.size != b.shape[0]:
        raise DimensionError(f"operator dim {b.shape[0]} is not {d}**{len(perm)}",
                             module="operator-core")
    return b[np.ix_(p, p)]


def permutation_unitary(perm, d):
    p = subsystem_index_map(perm, d)
    u = np.zeros((p.size, p.size), dtype=np.complex128)
    u[np.arange(p.size), p] = 1.0
    return u


# --------------------------------------------------------------------------
# Spectral measures.
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    eigenvalues: np.ndarray
    projectors: tuple

    def __len__(self):
        return len(self.projectors)

    def probabilities(self, rho):
        r = as_operator(rho)
        p = np.array([np.trace(P @ r).real for P in self.projectors])
        return np.clip(p, 0.0, None)

    def reconstruct(self):
        return sum(l * P for l, P in zip(self.eigenvalues, self.projectors))


def spectral(a, merge_tol=MERGE_TOL):
    """Projection-valued measure of a Hermitian operator.

    Eigenvalues closer than ``merge_tol`` to their neighbour are merged
    into a single outcome.
    """
    a = as_operator(a)
    if not is_hermitian(a, 1e-10 * max(1.0, float(np.max(np.abs(a), initial=0.0)))):
        raise ValidationError("spectral() needs a Hermitian operator", module="operator-core")
    w, v = np.linalg.eigh(hermitian_part(a))
    groups = [[0]] if w.size else []
    for i in range(1, w.size):
        if w[i] - w[i - 1] <= merge_tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    vals, projs = [], []
    for g in groups:
        vg = v[:, g]
        vals.append(float(np.mean(w[g])))
        projs.append(vg @ dag(vg))
    return SpectralMeasure(np.array(vals), tuple(projs))
