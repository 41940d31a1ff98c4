"""Stable laws through their Poisson series representation.

Submodules:
    special_fn: incomplete gamma functions and the stable normalising constant.
    stable_core: stable parameters, exact CF, weight-to-stable mapping, CMS sampling.
    psr_engine: truncated series, residual moments and samplers.
    charfns: log characteristic functions in series, integral and closed form.
    bounds: closed-form Kolmogorov-distance bounds and the truncation planner.
    distance: smoothing-integral quadrature and empirical KS statistics.
    inference: Metropolis-within-Gibbs regression with stable noise.
    cli: command-line front end.
"""
from .errors import ConvergenceError, DomainError, SingularPrecisionError, UnreachableToleranceError
from .stable_core import GaussianWParams, StableParams, cms_sample, map_w_to_stable, stable_log_cf
from .psr_engine import PsrConfig, residual_moments, sample_x_hat, sample_x_hat_batch
from .bounds import bound_b1, bound_b4, bound_b5, bound_b6, c_of_alpha, choose_c
from .distance import esseen_bound, ks_one_sample, ks_two_sample

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DomainError",
    "SingularPrecisionError",
    "UnreachableToleranceError",
    "GaussianWParams",
    "StableParams",
    "cms_sample",
    "map_w_to_stable",
    "stable_log_cf",
    "PsrConfig",
    "residual_moments",
    "sample_x_hat",
    "sample_x_hat_batch",
    "bound_b1",
    "bound_b4",
    "bound_b5",
    "bound_b6",
    "c_of_alpha",
    "choose_c",
    "esseen_bound",
    "ks_one_sample",
    "ks_two_sample",
]
