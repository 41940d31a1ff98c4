"""Stable parameters, the stable characteristic function, the map from Gaussian
jump weights to stable parameters, and Chambers-Mallows-Stuck sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError
from .special_fn import c_alpha_const

_ALPHA_ONE_GUARD = 1e-6


def check_alpha(alpha: float) -> float:
    """Validate a stability index: finite, in (0, 2) and away from 1."""
    alpha = float(alpha)
    if not math.isfinite(alpha) or not 0.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (0, 2), got {alpha}")
    if abs(alpha - 1.0) < _ALPHA_ONE_GUARD:
        raise DomainError("alpha = 1 is not supported")
    return alpha


@dataclass(frozen=True)
class StableParams:
    """Parameters of a stable law S_alpha(sigma, beta, mu)."""

    alpha: float
    sigma: float
    beta: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        check_alpha(self.alpha)
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise DomainError("sigma must be positive and finite")
        if not (math.isfinite(self.beta) and -1.0 <= self.beta <= 1.0):
            raise DomainError("beta must lie in [-1, 1]")
        if not math.isfinite(self.mu):
            raise DomainError("mu must be finite")


@dataclass(frozen=True)
class GaussianWParams:
    """Gaussian jump weights W ~ N(mu_w, sigma_w^2); ``sigma_w = 0`` gives W = mu_w."""

    mu_w: float = 0.0
    sigma_w: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.mu_w) and math.isfinite(self.sigma_w)):
            raise DomainError("weight parameters must be finite")
        if self.sigma_w < 0:
            raise DomainError("sigma_w must be non-negative")
        if self.sigma_w == 0 and self.mu_w == 0:
            raise DomainError("degenerate weights W = 0")

    @property
    def second_moment(self) -> float:
        return self.mu_w ** 2 + self.sigma_w ** 2

    def raw_moments(self, k_max: int) -> np.ndarray:
        """E[W^k] for k = 0..k_max via the Gaussian moment recurrence."""
        m = np.zeros(k_max + 1)
        m[0] = 1.0
        if k_max >= 1:
            m[1] = self.mu_w
        for k in range(2, k_max + 1):
            m[k] = self.mu_w * m[k - 1] + (k - 1) * self.sigma_w ** 2 * m[k - 2]
        return m


def stable_log_cf(params: StableParams, s):
    """Log characteristic function of S_alpha(sigma, beta, mu), alpha != 1.

    ``-sigma^alpha |s|^alpha (1 - i beta sign(s) tan(pi alpha / 2)) + i mu s``
    """
    alpha = check_alpha(params.alpha)
    s = np.asarray(s, dtype=float)
    skew = 1j * params.beta * np.sign(s) * math.tan(math.pi * alpha / 2.0)
    out = -(params.sigma ** alpha) * np.abs(s) ** alpha * (1.0 - skew) + 1j * params.mu * s
    return complex(out) if out.ndim == 0 else out


def _abs_power_moments(alpha: float, w: GaussianWParams, tol: float) -> tuple[float, float]:
    """Return (E|W|^alpha, E[|W|^alpha sign W]) by quadrature in the standard normal variable."""
    if w.sigma_w == 0:
        a = abs(w.mu_w) ** alpha
        return a, math.copysign(a, w.mu_w)
    mu, sd = w.mu_w, w.sigma_w
    kink = -mu / sd
    dens = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)  # noqa: E731
    neg = lambda z: abs(mu + sd * z) ** alpha * dens(z)  # noqa: E731
    opts = dict(epsabs=tol, epsrel=tol, limit=200)
    # split at the kink of |w|^alpha; quadrature is finite-range for robustness
    lo_part = integrate.quad(neg, kink - 40.0, kink, **opts)[0]
    hi_part = integrate.quad(neg, kink, kink + 40.0, **opts)[0]
    return lo_part + hi_part, hi_part - lo_part


def map_w_to_stable(alpha: float, w_params: GaussianWParams, tol: float = 1e-10) -> StableParams:
    """Stable parameters of the series sum_j W_j Gamma_j^(-1/alpha) (centred when alpha > 1).

    ``sigma^alpha = E|W|^alpha / C_alpha`` and
    ``beta = E[|W|^alpha sign W] / E|W|^alpha``.
    """
    alpha = check_alpha(alpha)
    abs_mom, signed_mom = _abs_power_moments(alpha, w_params, tol)
    sigma = (abs_mom / c_alpha_const(alpha)) ** (1.0 / alpha)
    beta = float(np.clip(signed_mom / abs_mom, -1.0, 1.0))
    return StableParams(alpha=alpha, sigma=sigma, beta=beta, mu=0.0)


def cms_sample(params: StableParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` variates from S_alpha(sigma, beta, mu) by the Chambers-Mallows-Stuck method."""
    alpha = check_alpha(params.alpha)
    if n < 0:
        raise DomainError("n must be non-negative")
    beta = params.beta
    tan_term = beta * math.tan(math.pi * alpha / 2.0)
    shift = math.atan(tan_term) / alpha
    scale = (1.0 + tan_term ** 2) ** (1.0 / (2.0 * alpha))
    v = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size=n)
    e = rng.standard_exponential(size=n)
    arg = alpha * (v + shift)
    x = (
        scale
        * np.sin(arg)
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos(v - arg) / e) ** ((1.0 - alpha) / alpha)
    )
    return params.sigma * x + params.mu
