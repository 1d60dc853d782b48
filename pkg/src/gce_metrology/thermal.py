"""Multimode thermal states: homodyne versus eigenmode photon counting.

The state is a product of Bose-Einstein distributions, one per mode, with
the eigenmodes fixed to the Fock basis.  Each mode is truncated at ``N``
photons and the truncated distribution is renormalized.

``q^2`` is the compression of the untruncated operator onto the truncated
space, i.e. ``(g^2 + g^dag^2 + 2 n + 1) / 2`` with exact matrix elements,
so its diagonal is exactly ``n + 1/2``.  Only the product ``q^2 q^2`` feels
the cutoff, in the last two rows.

The MSE curve never builds the ``(N+1)^J`` space: the estimators are
averages of single-mode operators and the state is a product, so first and
second moments factor per mode.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import ToleranceError, ValidationError
from .operators import density, tensor
from .parallel import ordered_map

TAIL_TOL = 1e-8
MAX_DIM = 4096
MAX_CUTOFF = 200_000
# q^2 q^2 couples |m> to |m + 2>, so the last two levels carry the truncation
# artifact; the curve keeps them beyond the tail-mass cutoff
QQ_GUARD = 2


@dataclass(frozen=True, eq=False)
class ThermalModel:
    spectrum: np.ndarray
    cutoff: int

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.spectrum, dtype=float)).ravel()
        if lam.size == 0 or np.any(~np.isfinite(lam)) or np.any(lam <= 0):
            raise ValidationError("thermal spectrum must be positive and finite", module="thermal-demo")
        n = int(self.cutoff)
        if n < 1:
            raise ValidationError("photon cutoff must be at least 1", module="thermal-demo")
        object.__setattr__(self, "spectrum", lam)
        object.__setattr__(self, "cutoff", n)

    @classmethod
    def flat(cls, J, x, cutoff="auto", tol=TAIL_TOL):
        lam = np.full(int(J), float(x))
        n = choose_cutoff(lam, tol) if cutoff == "auto" else int(cutoff)
        return cls(lam, n)

    @property
    def modes(self):
        return self.spectrum.size

    @property
    def dim(self):
        return (self.cutoff + 1) ** self.modes

    def tail_mass(self):
        return tail_mass(self.spectrum, self.cutoff)


def tail_mass(spectrum, cutoff):
    """Probability lost by truncating every mode at ``cutoff`` photons."""
    r = np.asarray(spectrum, dtype=float) / (1.0 + np.asarray(spectrum, dtype=float))
    # 1 - prod(1 - r^(N+1)) without cancellation for tiny tails
    return float(-np.expm1(np.sum(np.log1p(-r ** (cutoff + 1)))))


def choose_cutoff(spectrum, tol=TAIL_TOL):
    """Smallest per-mode cutoff whose truncation tail mass is below ``tol``."""
    lam = np.atleast_1d(np.asarray(spectrum, dtype=float))
    if np.any(lam <= 0):
        raise ValidationError("thermal spectrum must be positive", module="thermal-demo")
    r = float(np.max(lam / (1.0 + lam)))
    # each mode must lose less than ~tol/J; start there and walk up
    n = max(1, int(math.ceil(math.log(tol / lam.size) / math.log(r))) - 2) if r > 0 else 1
    n = min(n, MAX_CUTOFF)
    while n > 1 and tail_mass(lam, n - 1) < tol:
        n -= 1
    while tail_mass(lam, n) >= tol:
        n += 1
        if n > MAX_CUTOFF:
            raise ToleranceError(f"no cutoff below {MAX_CUTOFF} reaches tail mass {tol:.1e}",
                                 module="thermal-demo")
    return n


# --------------------------------------------------------------------------
# Single-mode pieces.
# --------------------------------------------------------------------------

def bose_einstein(lam, cutoff):
    """Truncated, renormalized photon-number distribution with mean ``lam``."""
    r = lam / (1.0 + lam)
    m = np.arange(cutoff + 1)
    p = np.exp(m * math.log(r)) if r > 0 else (m == 0).astype(float)
    return p / p.sum()


def annihilation(cutoff):
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1)


def number_operator(cutoff):
    return np.diag(np.arange(cutoff + 1, dtype=float))


def q_squared(cutoff):
    """Compression of ``q^2 = (g + g^dag)^2 / 2`` onto ``span{|0>, ..., |N>}``."""
    m = np.arange(cutoff + 1, dtype=float)
    out = np.diag(m + 0.5)
    off = 0.5 * np.sqrt(m[2:] * (m[2:] - 1.0))
    idx = np.arange(cutoff - 1)
    out[idx, idx + 2] = off
    out[idx + 2, idx] = off
    return out


def _moments(p, s):
    """``(<s>, <s s>)`` for diagonal state ``p`` and real symmetric ``s``."""
    return float(p @ np.diag(s)), float(p @ np.einsum("ij,ij->i", s, s))


# --------------------------------------------------------------------------
# Full-space operators (small J and N only).
# --------------------------------------------------------------------------

def _check_budget(model, max_dim):
    if model.dim > max_dim:
        raise ValidationError(f"(N+1)^J = {model.dim} exceeds the dimension budget {max_dim}",
                              module="thermal-demo")


def _mode_sum(model, single):
    eye = np.eye(model.cutoff + 1)
    total = np.zeros((model.dim, model.dim))
    for j in range(model.modes):
        factors = [eye] * model.modes
        factors[j] = single
        total += tensor(*factors).real
    return total / model.modes


def thermal_state(model, max_dim=MAX_DIM):
    _check_budget(model, max_dim)
    p = np.ones(1)
    for lam in model.spectrum:
        p = np.kron(p, bose_einstein(lam, model.cutoff))
    return density(np.diag(p).astype(complex))


def homodyne_estimator(model, max_dim=MAX_DIM):
    """``(1/J) sum_j q_j^2 - 1/2``."""
    _check_budget(model, max_dim)
    return _mode_sum(model, q_squared(model.cutoff)) - 0.5 * np.eye(model.dim)


def photon_counting_estimator(model, max_dim=MAX_DIM):
    """``(1/J) sum_j n_j``; diagonal in the Fock basis."""
    _check_budget(model, max_dim)
    return _mode_sum(model, number_operator(model.cutoff))


def fock_projectors(model, max_dim=MAX_DIM):
    _check_budget(model, max_dim)
    out = []
    for k in range(model.dim):
        p = np.zeros((model.dim, model.dim), dtype=complex)
        p[k, k] = 1.0
        out.append(p)
    return out


# --------------------------------------------------------------------------
# MSE curve.
# --------------------------------------------------------------------------

def analytic_mse(J, x):
    """``(homodyne, counting)`` MSEs of the untruncated problem."""
    return 2.0 / J * (x + 0.5) ** 2, (x * x + x) / J


@dataclass(frozen=True)
class ThermalPoint:
    x: float
    mse_homodyne_numeric: float
    mse_homodyne_analytic: float
    mse_counting_numeric: float
    mse_counting_analytic: float
    gap: float
    divergence: float
    cutoff: int
    tail: float

    def row(self):
        return (self.x, self.mse_homodyne_numeric, self.mse_homodyne_analytic,
                self.mse_counting_numeric, self.mse_counting_analytic, self.gap, self.divergence)

    @property
    def rel_err_homodyne(self):
        return abs(self.mse_homodyne_numeric - self.mse_homodyne_analytic) / self.mse_homodyne_analytic

    @property
    def rel_err_counting(self):
        return abs(self.mse_counting_numeric - self.mse_counting_analytic) / self.mse_counting_analytic


CSV_HEADER = ("x", "mse_homodyne_numeric", "mse_homodyne_analytic", "mse_counting_numeric",
              "mse_counting_analytic", "gap", "divergence")


def _mode_mse(moments, x, shift):
    """MSE of ``(1/J) sum_j s_j + shift`` about ``x`` from per-mode moments."""
    J = len(moments)
    mean = sum(m for m, _ in moments) / J + shift
    var = sum(m2 - m * m for m, m2 in moments) / J ** 2
    return var + (mean - x) ** 2


def thermal_point(model, x, q2=None):
    """Numeric MSEs, their gap and the divergence for one state.

    ``x`` is the true parameter; with a flat spectrum it equals the mean
    photon number per mode.
    """
    N = model.cutoff
    q2 = q_squared(N) if q2 is None else q2
    nop = np.arange(N + 1, dtype=float)
    hom, cnt, div = [], [], 0.0
    h = q2 - np.diag(np.diag(q2))
    for lam in model.spectrum:
        p = bose_einstein(lam, N)
        hom.append(_moments(p, q2))
        cnt.append((float(p @ nop), float(p @ nop ** 2)))
        div += _moments(p, h)[1]
    J = model.modes
    mh = _mode_mse(hom, x, -0.5)
    mc = _mode_mse(cnt, x, 0.0)
    ah, ac = analytic_mse(J, x)
    # the homodyne-minus-counting difference is purely off-diagonal, and its
    # cross-mode terms vanish on a diagonal product state
    return ThermalPoint(float(x), mh, ah, mc, ac, mh - mc, div / J ** 2, N, model.tail_mass())


def thermal_mse_curve(J, x_grid, cutoff="auto", tol=TAIL_TOL, threads=None):
    """One :class:`ThermalPoint` per grid value for a flat spectrum.

    ``cutoff="auto"`` picks the smallest cutoff that meets ``tol`` at the
    largest grid point, adds :data:`QQ_GUARD` levels, and uses it everywhere.
    An explicit cutoff must leave tail mass below ``tol`` beyond its last
    ``QQ_GUARD`` levels.
    """
    J = int(J)
    if J < 1:
        raise ValidationError("J must be a positive integer", module="thermal-demo")
    xs = np.asarray(x_grid, dtype=float).ravel()
    if xs.size == 0:
        return []
    if np.any(~np.isfinite(xs)) or np.any(xs <= 0):
        raise ValidationError("x grid must be positive", module="thermal-demo")
    if cutoff == "auto":
        n = choose_cutoff(np.full(J, xs.max()), tol) + QQ_GUARD
    else:
        n = int(cutoff)
        worst = tail_mass(np.full(J, xs.max()), n - QQ_GUARD) if n > QQ_GUARD else 1.0
        if worst >= tol:
            raise ToleranceError(f"cutoff {n} leaves tail mass {worst:.3e} >= {tol:.1e} at x = {float(xs.max()):g}",
                                 module="thermal-demo")
    q2 = q_squared(n)
    return ordered_map(lambda x: thermal_point(ThermalModel(np.full(J, x), n), x, q2), xs, threads)


def x_grid(xmin, xmax, points):
    """Log-spaced grid, or the single point ``xmin`` when ``points == 1``."""
    if points < 1:
        raise ValidationError("points must be at least 1", module="thermal-demo")
    if xmin <= 0 or xmax < xmin:
        raise ValidationError("need 0 < xmin <= xmax", module="thermal-demo")
    if points == 1:
        return np.array([float(xmin)])
    return np.geomspace(xmin, xmax, points)
