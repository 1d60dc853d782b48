"""Bayesian quantum parameter estimation with operator-valued estimators.

The hidden parameter lives on a finite grid with prior ``P_X``; the sensor
state given ``x`` is ``rho_x``.  The problem is recast as a prior state
``sigma = diag(P_X)``, an observable ``A = diag(a)`` and a classical-quantum
channel, after which the Personick estimator is a Jordan-product GCE.
"""
from dataclasses import dataclass, field

import numpy as np

from .channels import compose, cq_channel, measurement_channel
from .errors import DimensionError, ValidationError
from .gce import chain_gce, divergence, gce
from .operators import JORDAN, ProductKind, as_operator, density, is_hermitian, spectral

PRIOR_TOL = 1e-12
WV_TINY = 1e-14


@dataclass(frozen=True, eq=False)
class BayesModel:
    labels: tuple
    prior: np.ndarray
    states: tuple
    values: np.ndarray

    def __post_init__(self):
        prior = np.asarray(self.prior, dtype=float).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        states = tuple(density(s) for s in self.states)
        labels = tuple(self.labels) if self.labels is not None else tuple(range(len(states)))
        n = len(states)
        if n == 0:
            raise ValidationError("BayesModel needs at least one parameter point", module="bayes-estimation")
        if not (prior.size == values.size == len(labels) == n):
            raise ValidationError(f"labels/prior/states/values lengths differ: "
                                  f"{len(labels)}/{prior.size}/{n}/{values.size}", module="bayes-estimation")
        if np.any(prior < 0) or abs(prior.sum() - 1.0) > PRIOR_TOL:
            raise ValidationError(f"prior must be nonnegative and sum to 1 (sum is {float(prior.sum()):.17g})",
                                  module="bayes-estimation")
        if any(s.dim != states[0].dim for s in states):
            raise DimensionError("all conditional states must share one dimension", module="bayes-estimation")
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self):
        return self.states[0].dim

    @property
    def sigma(self):
        return density(np.diag(self.prior).astype(complex))

    @property
    def observable(self):
        return np.diag(self.values).astype(complex)

    @property
    def channel(self):
        return cq_channel(self.states)

    @property
    def prior_mean(self):
        return float(self.prior @ self.values)

    @property
    def prior_variance(self):
        return float(self.prior @ (self.values - self.prior_mean) ** 2)

    def mixture(self):
        return density(sum(p * s.matrix for p, s in zip(self.prior, self.states)))


@dataclass(frozen=True, eq=False)
class EstimatorReport:
    estimator: np.ndarray
    bayes_mse: float
    regret: float = None
    stages: tuple = field(default=(), repr=False)

    def as_dict(self):
        d = {"estimator": self.estimator, "bayes_mse": self.bayes_mse}
        if self.regret is not None:
            d["regret"] = self.regret
        return d


def _require_jordan(product):
    if ProductKind.parse(product) is not JORDAN:
        raise ValidationError("mean-square-error semantics require the Jordan product",
                              module="bayes-estimation")


def personick(model, product=JORDAN):
    """Optimal operator-valued Bayesian estimator and its Bayesian error."""
    _require_jordan(product)
    res = gce(JORDAN, model.sigma, model.channel, model.observable)
    return EstimatorReport(res.estimator, res.min_divergence, stages=(res,))


def bayes_mse_of(model, b):
    """Prior-averaged MSE of a von Neumann measurement of ``b``, by outcome enumeration."""
    b = as_operator(b, "estimator")
    if b.shape[0] != model.dim:
        raise DimensionError(f"estimator dim {b.shape[0]} != sensor dim {model.dim}", module="bayes-estimation")
    if not is_hermitian(b, 1e-10 * max(1.0, np.abs(b).max())):
        raise ValidationError("estimator must be Hermitian", module="bayes-estimation")
    pvm = spectral(b)
    total = 0.0
    for px, rho, ax in zip(model.prior, model.states, model.values):
        probs = pvm.probabilities(rho)
        total += px * float(probs @ (pvm.eigenvalues - ax) ** 2)
    return total


def personick_after(model, g):
    """Personick estimator after an extra channel ``g`` acting on the sensor.

    The regret is the divergence between the estimators before and after
    ``g``; the returned ``bayes_mse`` is the pre-channel error plus regret.
    """
    if g.dim_in != model.dim:
        raise DimensionError(f"channel '{g.label}' expects dim {g.dim_in}, sensor has dim {model.dim}",
                             module="bayes-estimation")
    first, second = chain_gce(JORDAN, model.sigma, [model.channel, g], model.observable)
    regret = second.min_divergence
    return EstimatorReport(second.estimator, first.min_divergence + regret, regret, stages=(first, second))


def weak_value_estimator(model, povm):
    """Optimal post-processing of a fixed POVM: per-outcome real weak values.

    Returns ``(b, report)`` where ``b[y]`` is the estimate for outcome ``y``
    and ``report.estimator`` is ``diag(b)`` on the outcome space.  Outcomes
    with negligible probability get the prior mean.
    """
    povm = [as_operator(m, "POVM element") for m in povm]
    meas = measurement_channel(povm)
    if meas.dim_in != model.dim:
        raise DimensionError(f"POVM acts on dim {meas.dim_in}, sensor has dim {model.dim}",
                             module="bayes-estimation")
    pers = personick(model)
    x = pers.estimator
    rho = model.mixture().matrix
    xr = x @ rho
    b = np.empty(len(povm))
    for y, m in enumerate(povm):
        p = np.trace(m @ rho).real
        b[y] = np.trace(m @ xr).real / p if p > WV_TINY else model.prior_mean
    est = np.diag(b).astype(complex)
    full = compose(meas, model.channel)
    mse = divergence(JORDAN, model.sigma, full, model.observable, est)
    return b, EstimatorReport(est, mse, mse - pers.bayes_mse)


def personick_measurement(model):
    """Spectral projectors of the Personick estimator (an optimal POVM)."""
    return list(spectral(personick(model).estimator).projectors)


def von_neumann_sample(b, rho, seed=None, size=None):
    """Sample outcomes of a von Neumann measurement of ``b`` on ``rho``."""
    pvm = spectral(b)
    rho = density(rho)
    if rho.dim != pvm.projectors[0].shape[0]:
        raise DimensionError("state and observable dimensions differ", module="bayes-estimation")
    p = pvm.probabilities(rho)
    p = p / p.sum()
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(p), size=size, p=p)
    return pvm.eigenvalues[idx] if size is not None else float(pvm.eigenvalues[idx])


@dataclass(frozen=True, eq=False)
class PersonickRbCheck:
    x_independent: bool
    spread: float
    estimator: np.ndarray
    mse_before: np.ndarray
    mse_after: np.ndarray
    bayes_before: float
    bayes_after: float


def rao_blackwell_personick(model, g, indep_tol=1e-8):
    """Rao-Blackwellize the Personick estimator through ``g`` per parameter point.

    When the per-``x`` GCEs coincide, the Rao-Blackwell estimator is also the
    post-``g`` Personick estimator and the local errors are unchanged on the
    support of the prior.
    """
    from .rao_blackwell import freq_mse_vector, x_independent_gce

    b = personick(model).estimator
    support = [model.states[i] for i, p in enumerate(model.prior) if p > 0]
    rb, spread = x_independent_gce(support, g, b)
    before = freq_mse_vector(model.states, model.values, b)
    after = freq_mse_vector([g.apply(s) for s in model.states], model.values, rb)
    after_p = personick_after(model, g)
    return PersonickRbCheck(spread <= indep_tol, spread, rb, before, after,
                            float(model.prior @ before), after_p.bayes_mse)
