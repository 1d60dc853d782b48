"""Moment-level GCE for Gaussian states, Gaussian channels and quadratures.

Only means and covariances are tracked.  The uncertainty relation of the
covariance and the complete-positivity inequality on ``(F, R)`` are not
checked.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError

PINV_RTOL = 1e-12


def _sym_psd(m, name, tol=1e-10):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square", module="gaussian")
    if np.max(np.abs(m - m.T), initial=0.0) > 1e-12 * max(1.0, np.abs(m).max(initial=0.0)):
        raise ValidationError(f"{name} is not symmetric", module="gaussian")
    m = 0.5 * (m + m.T)
    if m.size and np.linalg.eigvalsh(m)[0] < -tol * max(1.0, np.abs(m).max()):
        raise ValidationError(f"{name} is not positive semidefinite", module="gaussian")
    return m


@dataclass(frozen=True, eq=False)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mean, dtype=float).ravel()
        c = _sym_psd(self.cov, "covariance")
        if c.shape[0] != m.size or m.size % 2:
            raise DimensionError("mean must have even length 2s matching the 2s x 2s covariance",
                                 module="gaussian")
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "cov", c)

    @property
    def modes(self):
        return self.mean.size // 2


@dataclass(frozen=True, eq=False)
class GaussianChannel:
    F: np.ndarray
    l: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        l = np.asarray(self.l, dtype=float).ravel()
        R = _sym_psd(self.R, "channel noise covariance R")
        if F.shape[0] != l.size or R.shape[0] != l.size:
            raise DimensionError("F rows, l and R must all have length 2t", module="gaussian")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "R", R)

    @classmethod
    def identity(cls, s):
        return cls(np.eye(2 * s), np.zeros(2 * s), np.zeros((2 * s, 2 * s)))


def gauss_apply(ch, state):
    if ch.F.shape[1] != state.mean.size:
        raise DimensionError(f"channel takes {ch.F.shape[1]} quadratures, state has {state.mean.size}",
                             module="gaussian")
    return GaussianState(ch.F @ state.mean + ch.l, ch.F @ state.cov @ ch.F.T + ch.R)


@dataclass(frozen=True, eq=False)
class GaussGce:
    gain: np.ndarray
    offset: float
    coefficients: np.ndarray
    divergence: float
    singular: bool = False

    def as_dict(self):
        return {"K": self.gain, "offset": self.offset, "v": self.coefficients,
                "divergence": self.divergence, "pseudoinverse": self.singular}


def gauss_gce(state, ch, u, allow_pinv=True):
    """GCE of the quadrature ``u^T Q`` through a Gaussian channel.

    The estimator is ``offset + v^T Q_out`` with ``v = K^T u``,
    ``K = Sigma F^T (F Sigma F^T + R)^{-1}``.
    """
    u = np.asarray(u, dtype=float).ravel()
    if u.size != state.mean.size:
        raise DimensionError(f"quadrature vector has length {u.size}, expected {state.mean.size}",
                             module="gaussian")
    out = gauss_apply(ch, state)
    sig, F = state.cov, ch.F
    s_out = out.cov
    singular = np.linalg.matrix_rank(s_out, tol=PINV_RTOL * max(np.abs(s_out).max(initial=0.0), 1e-300)) < s_out.shape[0]
    if singular:
        if not allow_pinv:
            raise ValidationError("output covariance is singular", module="gaussian")
        inv = np.linalg.pinv(s_out, rcond=PINV_RTOL, hermitian=True)
    else:
        inv = np.linalg.inv(s_out)
    K = sig @ F.T @ inv
    v = K.T @ u
    offset = float(u @ (state.mean - K @ out.mean))
    div = float(u @ (sig - K @ F @ sig) @ u)
    return GaussGce(K, offset, v, div, bool(singular))


def classical_lg_oracle(m, Sigma, F, l, R, u):
    """Conditional mean of ``u^T X`` given ``Y = F X + Z`` for independent normals.

    Computed from the precision (inverse joint covariance) blocks:
    ``E[X|Y=y] = m - P_xx^{-1} P_xy (y - mu_y)``, ``Cov[X|Y] = P_xx^{-1}``.
    Returns ``(coefficients, offset, mse)`` with the estimator
    ``offset + coefficients^T y``.
    """
    m = np.asarray(m, dtype=float).ravel()
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    F = np.atleast_2d(np.asarray(F, dtype=float))
    l = np.asarray(l, dtype=float).ravel()
    R = np.atleast_2d(np.asarray(R, dtype=float))
    u = np.asarray(u, dtype=float).ravel()
    nx = m.size
    cxy = Sigma @ F.T
    joint = np.block([[Sigma, cxy], [cxy.T, F @ Sigma @ F.T + R]])
    w = np.linalg.eigvalsh(0.5 * (joint + joint.T))
    if w[0] <= 1e-12 * max(w[-1], 1e-300):
        raise ValidationError("joint covariance of (X, Y) is singular", module="gaussian")
    prec = np.linalg.inv(joint)
    pxx = prec[:nx, :nx]
    pxy = prec[:nx, nx:]
    cond_cov = np.linalg.inv(pxx)
    gain = -cond_cov @ pxy
    mu_y = F @ m + l
    coeff = gain.T @ u
    offset = float(u @ (m - gain @ mu_y))
    mse = float(u @ cond_cov @ u)
    return coeff, offset, mse
