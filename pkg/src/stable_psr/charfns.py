"""Log characteristic functions of the truncated series, its residual and their
Gaussian surrogates.

Three families are provided:

* a power series for the standardised residual ``Z = (R - m) / S``;
* quadrature of the Levy-Khintchine type integrals for Gaussian weights;
* closed forms for symmetric weights (``mu_W = 0``) in the rescaled variables

  ``w = eta s^2 / (2 c)`` and ``u = w S^2 = sigma_W^2 s^2 c^(-2/alpha) / 2``,

  with ``a = alpha / 2`` and ``eta = (1 - a) / a``.

Everything is returned on the log scale.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError
from .psr_engine import PsrConfig, centring_offset, residual_moments
from .special_fn import lower_inc_gamma, upper_inc_gamma
from .stable_core import GaussianWParams, check_alpha

_SERIES_SWITCH = 2.0
_SERIES_TERMS = 60


def eta_of(alpha: float) -> float:
    a = alpha / 2.0
    return (1.0 - a) / a


@dataclass(frozen=True)
class CfPoint:
    """A frequency expressed in the ``s``, ``w`` and ``u`` variables."""

    s: float
    w: float
    u: float

    @classmethod
    def from_s(cls, alpha: float, c: float, sigma_w: float, s: float) -> "CfPoint":
        w = eta_of(alpha) * s * s / (2.0 * c)
        return cls(s=s, w=w, u=w * residual_var_factor(alpha, c) * sigma_w ** 2)

    @classmethod
    def from_w(cls, alpha: float, c: float, sigma_w: float, w: float) -> "CfPoint":
        if w < 0:
            raise DomainError("w must be non-negative")
        s = math.sqrt(2.0 * c * w / eta_of(alpha))
        return cls(s=s, w=w, u=w * residual_var_factor(alpha, c) * sigma_w ** 2)


def residual_var_factor(alpha: float, c: float) -> float:
    """``(alpha / (2 - alpha)) c^((alpha - 2) / alpha)``, the residual variance per unit E[W^2]."""
    return alpha / (2.0 - alpha) * c ** ((alpha - 2.0) / alpha)


# ---------------------------------------------------------------- closed forms


def _g_series(a: float, w: np.ndarray, start: int) -> np.ndarray:
    """sum_{j >= start} (-1)^j a w^j / (j! (j - a))."""
    term = np.ones_like(w)
    for j in range(1, start):
        term = term * (-w) / j
    total = np.zeros_like(w)
    for j in range(start, start + _SERIES_TERMS):
        term = term * (-w) / j
        total = total + term * a / (j - a)
    return total


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise DomainError("argument must be finite and non-negative")
    return arr


def _wrap(out: np.ndarray, like):
    return float(out) if np.ndim(like) == 0 else out


def g_fn(alpha: float, w):
    """``g(w) = 1 - exp(-w) - w^a gamma(1 - a, w)`` with ``a = alpha / 2``."""
    a = check_alpha(alpha) / 2.0
    w_arr = np.atleast_1d(_as_array(w))
    out = np.empty_like(w_arr)
    small = w_arr < _SERIES_SWITCH
    out[small] = _g_series(a, w_arr[small], 1)
    big = ~small
    if big.any():
        wb = w_arr[big]
        out[big] = -np.expm1(-wb) - wb ** a * lower_inc_gamma(1.0 - a, wb)
    return _wrap(out.reshape(np.shape(w)), w)


def g_shift_fn(alpha: float, w):
    """``g(w) + w / eta``, evaluated without cancellation for small ``w``."""
    a = check_alpha(alpha) / 2.0
    w_arr = np.atleast_1d(_as_array(w))
    out = np.empty_like(w_arr)
    small = w_arr < _SERIES_SWITCH
    out[small] = _g_series(a, w_arr[small], 2)
    big = ~small
    if big.any():
        out[big] = np.atleast_1d(g_fn(alpha, w_arr[big])) + w_arr[big] / eta_of(alpha)
    return _wrap(out.reshape(np.shape(w)), w)


def stable_power_fn(alpha: float, u):
    """``u^a Gamma(1 - a)``: minus the stable log-CF per unit ``c`` in the ``u`` variable."""
    a = check_alpha(alpha) / 2.0
    return _wrap(np.asarray(_as_array(u) ** a * math.gamma(1.0 - a)), u)


def q_fn(alpha: float, u):
    """``q(u) = -(1 - exp(-u) + u^a Gamma(1 - a, u))``; equals ``-g(u) - u^a Gamma(1 - a)``."""
    a = check_alpha(alpha) / 2.0
    u_arr = np.atleast_1d(_as_array(u))
    out = np.empty_like(u_arr)
    small = u_arr < _SERIES_SWITCH
    if small.any():
        us = u_arr[small]
        out[small] = -_g_series(a, us, 1) - us ** a * math.gamma(1.0 - a)
    big = ~small
    if big.any():
        ub = u_arr[big]
        out[big] = -(-np.expm1(-ub) + ub ** a * upper_inc_gamma(1.0 - a, ub))
    return _wrap(out.reshape(np.shape(u)), u)


def log_cf_Z_closed(alpha: float, c: float, w):
    """Standardised residual, symmetric weights: ``c g(w)``."""
    return _scale(c, g_fn(alpha, w))


def log_cf_Z_gauss(alpha: float, c: float, w):
    """Standard normal written in ``w``: ``-c w / eta`` (equals ``-s^2 / 2``)."""
    return _scale(-c / eta_of(check_alpha(alpha)), _as_array(w), like=w)


def log_cf_R_closed(alpha: float, c: float, u):
    """Residual ``R_(c,inf)``, symmetric weights: ``c g(u)``."""
    return _scale(c, g_fn(alpha, u))


def log_cf_R_hat_closed(alpha: float, c: float, u):
    """Gaussian residual surrogate: ``-c u / eta``."""
    return log_cf_Z_gauss(alpha, c, u)


def log_cf_X0c_closed(alpha: float, c: float, u):
    """Truncated series ``X_(0,c)``, symmetric weights: ``c q(u)``."""
    return _scale(c, q_fn(alpha, u))


def log_cf_x_hat(alpha: float, c: float, u):
    """``X_hat``: ``c q(u) - c u / eta``."""
    u_arr = _as_array(u)
    out = c * np.asarray(q_fn(alpha, u_arr)) - c * u_arr / eta_of(alpha)
    return _wrap(out, u)


def log_cf_X_closed(alpha: float, c: float, u):
    """Full stable law in ``u``: ``-c u^a Gamma(1 - a)``, independent of ``c`` as a function of ``s``."""
    return _scale(-c, stable_power_fn(alpha, u))


def _scale(factor, values, like=None):
    out = factor * np.asarray(values, dtype=float)
    return _wrap(out, values if like is None else like)


# ------------------------------------------------------------------ series form


def log_cf_Z_series(
    alpha: float, w_params: GaussianWParams, c: float, s: float, k_max: Optional[int] = None
) -> tuple[complex, float]:
    """Power series of the log-CF of the standardised residual.

    ``-s^2/2 + sum_{k>=3} zbar_k s^k``.  With ``k_max=None`` terms are added
    until two consecutive terms fall below ``1e-14`` of the running sum, or
    ``k = 200``.

    Returns:
        ``(value, last_term_magnitude)``
    """
    alpha = check_alpha(alpha)
    if not c > 0:
        raise DomainError("c must be positive")
    if k_max is not None and k_max < 3:
        raise DomainError("k_max must be at least 3")
    if s == 0:
        return 0j, 0.0
    second = w_params.second_moment
    root = math.sqrt(second)
    mu_n, var_n = w_params.mu_w / root, w_params.sigma_w ** 2 / second
    y = s * math.sqrt((2.0 - alpha) / (alpha * c))
    # a_k = E[W^k] y^k / (k! E[W^2]^(k/2))
    a_prev2, a_prev = 1.0, mu_n * y
    total = complex(-0.5 * s * s)
    limit = 200 if k_max is None else k_max
    last = 0.0
    small_run = 0
    ik = [1, 1j, -1, -1j]
    for k in range(2, limit + 1):
        a_k = (mu_n * y / k) * a_prev + (var_n * y * y / k) * a_prev2
        a_prev2, a_prev = a_prev, a_k
        if k == 2:
            continue
        term = c * ik[k % 4] * a_k * alpha / (k - alpha)
        total += term
        last = abs(term)
        if k_max is None:
            small_run = small_run + 1 if last < 1e-14 * max(abs(total), 1e-300) else 0
            if small_run >= 2 and k > y * y + 2:
                break
    return total, last


# ---------------------------------------------------------------- integral forms


def _exp_tail(z):
    """``exp(z) - 1 - z`` without cancellation for small complex ``z``."""
    if abs(z) < 0.5:
        term, total = z * z / 2.0, 0j
        n = 2
        while True:
            total += term
            n += 1
            term = term * z / n
            if abs(term) <= 1e-17 * abs(total):
                return total + term
    return cmath.exp(z) - 1.0 - z


def _quad(fun, lo, hi, tol, **kw):
    val, err = integrate.quad(fun, lo, hi, epsabs=tol, epsrel=tol, limit=500, full_output=1, **kw)[:2]
    if not np.isfinite(val) or err > 1e3 * max(tol, tol * abs(val)):
        raise ConvergenceError(f"quadrature did not converge (achieved abs_err={err:.3g})")
    return val


def log_cf_R_integral(
    alpha: float,
    w_params: GaussianWParams,
    c: float,
    s: float,
    d: Optional[float] = None,
    tol: float = 1e-10,
) -> complex:
    """Log-CF of the residual ``R_(c,d)`` (``d=None`` for ``d = inf``) by quadrature.

    ``alpha int (exp(i s t mu_W - sigma_W^2 s^2 t^2 / 2) - 1 - i s mu_W t) t^(-alpha-1) dt``
    over ``[d^(-1/alpha), c^(-1/alpha)]`` plus the exact drift correction.  For
    ``d = inf`` the integrable ``t^(1-alpha)`` behaviour at zero is handled by an
    algebraic quadrature weight.
    """
    alpha = check_alpha(alpha)
    if not c > 0 or (d is not None and not d > c):
        raise DomainError("need 0 < c < d")
    if s == 0:
        return 0j
    mu, sd = w_params.mu_w, w_params.sigma_w
    p = (alpha - 1.0) / alpha
    hi = c ** (-1.0 / alpha)
    lo = 0.0 if d is None else d ** (-1.0 / alpha)
    half_var = 0.5 * sd * sd * s * s

    def numer(t):
        z = complex(-half_var * t * t, s * mu * t)
        return _exp_tail(z) - half_var * t * t

    if d is None:
        # weight t^(1 - alpha) leaves a smooth integrand numer(t) / t^2
        opts = dict(weight="alg", wvar=(1.0 - alpha, 0.0))
        re = _quad(lambda t: numer(t).real / (t * t) if t > 0 else -half_var, 0.0, hi, tol, **opts)
        im = 0.0
        if mu != 0:
            im = _quad(lambda t: numer(t).imag / (t * t) if t > 0 else 0.0, 0.0, hi, tol, **opts)
        drift = mu * alpha / (1.0 - alpha) * c ** p
    else:
        re = _quad(lambda t: numer(t).real * t ** (-alpha - 1.0), lo, hi, tol)
        im = 0.0
        if mu != 0:
            im = _quad(lambda t: numer(t).imag * t ** (-alpha - 1.0), lo, hi, tol)
        drift = mu * alpha / (1.0 - alpha) * (c ** p - d ** p) - centring_offset(alpha, mu, d)
    return complex(alpha * re, alpha * im + s * drift)


def log_cf_X0c_integral(
    alpha: float, w_params: GaussianWParams, c: float, s: float, tol: float = 1e-10
) -> complex:
    """Log-CF of the truncated series ``X_(0,c)`` by quadrature.

    Equal to ``alpha int_{c^(-1/alpha)}^inf (exp(i s t mu_W - sigma_W^2 s^2 t^2 / 2) - 1) t^(-alpha-1) dt``;
    the substitution ``v = t^(-alpha)`` turns it into the bounded integrand
    ``int_0^c (exp(...) - 1) dv`` on a finite range.
    """
    alpha = check_alpha(alpha)
    if not c > 0:
        raise DomainError("c must be positive")
    if s == 0:
        return 0j
    mu, sd = w_params.mu_w, w_params.sigma_w
    half_var = 0.5 * sd * sd * s * s

    def expo(v):
        t = v ** (-1.0 / alpha) if v > 0 else math.inf
        if math.isinf(t):
            return 0j
        damp = math.exp(-half_var * t * t) if half_var > 0 else 1.0
        return damp * cmath.exp(1j * s * mu * t)

    re = _quad(lambda v: expo(v).real - 1.0, 0.0, c, tol)
    im = 0.0
    if mu != 0:
        im = _quad(lambda v: expo(v).imag, 0.0, c, tol)
    return complex(re, im)


def log_cf_X_integral(alpha: float, w_params: GaussianWParams, s: float, tol: float = 1e-10) -> complex:
    """Log-CF of the full (centred) series as the sum of the head and residual integrals at ``c = 1``."""
    return log_cf_X0c_integral(alpha, w_params, 1.0, s, tol) + log_cf_R_integral(alpha, w_params, 1.0, s, None, tol)


def log_cf_R_hat(alpha: float, w_params: GaussianWParams, c: float, s: float) -> complex:
    """Gaussian surrogate of the residual with matched mean and variance, general weights."""
    mom = residual_moments(PsrConfig(alpha, w_params, c))
    return complex(-0.5 * mom.var * s * s, mom.mean * s)

