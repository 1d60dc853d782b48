"""Generalized conditional expectations for finite-dimensional quantum estimation.

Operators are plain complex ``numpy`` arrays; states are
:class:`DensityOperator` objects with a cached spectrum.
"""
__version__ = "0.1.0"

from .errors import DimensionError, GceError, ToleranceError, ValidationError
from .operators import (JORDAN, LEFT, ROOT, DensityOperator, ProductKind, SpectralMeasure, density, emap,
                        partial_trace, spectral, tensor, weighted_inner, weighted_norm_sq)
from .channels import Channel, adjoint_apply, apply, compose, cq_channel, measurement_channel
from .gce import GceResult, chain_gce, divergence, gce, predict, pythagoras_check
from .bayes import BayesModel, bayes_mse_of, personick, personick_after, weak_value_estimator
from .dp import DpProblem, exhaustive_search, solve_dp
from .rao_blackwell import (FreqModel, classical_rb, freq_mse, rb_ancilla, rb_apply, rb_direct_sum,
                            rb_permutation_haar, rb_sinha, rb_symmetrize, u_statistic)
from .gaussian import GaussianChannel, GaussianState, classical_lg_oracle, gauss_apply, gauss_gce
from .thermal import (ThermalModel, homodyne_estimator, photon_counting_estimator, thermal_mse_curve,
                      thermal_state)

__all__ = [
    "DimensionError", "GceError", "ToleranceError", "ValidationError",
    "JORDAN", "LEFT", "ROOT", "DensityOperator", "ProductKind", "SpectralMeasure", "density", "emap",
    "partial_trace", "spectral", "tensor", "weighted_inner", "weighted_norm_sq",
    "Channel", "adjoint_apply", "apply", "compose", "cq_channel", "measurement_channel",
    "GceResult", "chain_gce", "divergence", "gce", "predict", "pythagoras_check",
    "BayesModel", "bayes_mse_of", "personick", "personick_after", "weak_value_estimator",
    "DpProblem", "exhaustive_search", "solve_dp",
    "FreqModel", "classical_rb", "freq_mse", "rb_ancilla", "rb_apply", "rb_direct_sum",
    "rb_permutation_haar", "rb_sinha", "rb_symmetrize", "u_statistic",
    "GaussianChannel", "GaussianState", "classical_lg_oracle", "gauss_apply", "gauss_gce",
    "ThermalModel", "homodyne_estimator", "photon_counting_estimator", "thermal_mse_curve", "thermal_state",
]
