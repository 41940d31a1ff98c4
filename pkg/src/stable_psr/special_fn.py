"""Incomplete gamma functions and the stable normalising constant.

The lower function is summed from its power series when ``x < s + 1`` and the
upper function from its Legendre continued fraction (modified Lentz) otherwise;
each is obtained from the other through the complete gamma function.
All routines accept scalars or broadcastable arrays.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

from .errors import DomainError

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 5000


def _prepare(s, x):
    s_arr, x_arr = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(x, dtype=float))
    if not (np.all(np.isfinite(s_arr)) and np.all(np.isfinite(x_arr))):
        raise DomainError("incomplete gamma arguments must be finite")
    if np.any(x_arr < 0):
        raise DomainError("incomplete gamma requires x >= 0")
    if np.any((s_arr <= 0) & (s_arr == np.round(s_arr))):
        raise DomainError("incomplete gamma is undefined for non-positive integer s")
    return s_arr.astype(float), x_arr.astype(float)


def _finish(values: np.ndarray, scalar: bool):
    if np.any(np.isnan(values)):
        raise OverflowError("incomplete gamma evaluation produced NaN")
    if np.any(np.isinf(values)):
        raise OverflowError("incomplete gamma overflowed")
    return float(values) if scalar else values


def _series_sum(s: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Sum of x^n / (s (s+1) ... (s+n)), the series factor of the lower function."""
    term = 1.0 / s
    total = term.copy()
    active = np.ones(s.shape, dtype=bool)
    for n in range(1, _MAX_ITER):
        term = np.where(active, term * x / (s + n), 0.0)
        total = total + term
        active &= np.abs(term) > _EPS * np.abs(total)
        if not active.any():
            break
    return total


def _log_cf(s: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Log of the continued-fraction factor h with Gamma(s, x) = x^s e^{-x} h."""
    b = x + 1.0 - s
    c = np.full(s.shape, 1.0 / _TINY)
    d = 1.0 / np.where(np.abs(b) < _TINY, _TINY, b)
    h = d.copy()
    active = np.ones(s.shape, dtype=bool)
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > _EPS
        if not active.any():
            break
    return np.log(h)


def _lower_series(s: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.zeros(s.shape)
    pos = x > 0
    if pos.any():
        ss, xx = s[pos], x[pos]
        total = _series_sum(ss, xx)
        with np.errstate(over="ignore"):
            out[pos] = np.exp(ss * np.log(xx) - xx) * total
    neg_at_zero = (~pos) & (s < 0)
    out[neg_at_zero] = np.inf
    return out


def _upper_cf(s: np.ndarray, x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.exp(s * np.log(x) - x + _log_cf(s, x))


def lower_inc_gamma(s, x):
    """Lower incomplete gamma function gamma(s, x) = int_0^x t^(s-1) e^(-t) dt.

    For negative non-integer ``s`` the analytic continuation is returned.

    Args:
        s: Shape parameter; any real value except non-positive integers.
        x: Non-negative argument.

    Returns:
        float or ndarray broadcast from the inputs.

    Raises:
        DomainError: invalid ``s`` or ``x``.
        OverflowError: the result is not representable.
    """
    scalar = np.ndim(s) == 0 and np.ndim(x) == 0
    s_arr, x_arr = _prepare(s, x)
    out = np.empty(s_arr.shape)
    series = x_arr < s_arr + 1.0
    if series.any():
        out[series] = _lower_series(s_arr[series], x_arr[series])
    cf = ~series
    if cf.any():
        ss, xx = s_arr[cf], x_arr[cf]
        upper = np.empty(ss.shape)
        neg = (ss < 0) & (xx < 2.0)
        if neg.any():
            upper[neg] = _upper_negative(ss[neg], xx[neg])
        if (~neg).any():
            upper[~neg] = _upper_cf(ss[~neg], xx[~neg])
        out[cf] = _sp.gamma(ss) - upper
    return _finish(out, scalar)


def _upper_negative(s: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Gamma(s, x) for s < 0 via downward recurrence from s + n in (0, 1)."""
    n = np.ceil(-s)
    out = np.empty(s.shape)
    for idx in np.ndindex(s.shape):
        k = int(n[idx])
        si, xi = s[idx] + k, x[idx]
        val = float(upper_inc_gamma(si, xi))
        for _ in range(k):
            si -= 1.0
            val = (val - math.exp(si * math.log(xi) - xi)) / si
        out[idx] = val
    return out


def upper_inc_gamma(s, x):
    """Upper incomplete gamma function Gamma(s, x) = int_x^inf t^(s-1) e^(-t) dt.

    Args:
        s: Shape parameter; any real value except non-positive integers.
        x: Argument, ``x >= 0`` and strictly positive when ``s <= 0``.

    Returns:
        float or ndarray broadcast from the inputs.
    """
    scalar = np.ndim(s) == 0 and np.ndim(x) == 0
    s_arr, x_arr = _prepare(s, x)
    if np.any((s_arr <= 0) & (x_arr == 0)):
        raise DomainError("upper incomplete gamma needs x > 0 when s <= 0")
    out = np.empty(s_arr.shape)
    recur = (s_arr < 0) & (x_arr < 2.0)
    if recur.any():
        out[recur] = _upper_negative(s_arr[recur], x_arr[recur])
    series = (x_arr < s_arr + 1.0) & ~recur
    if series.any():
        ss, xx = s_arr[series], x_arr[series]
        out[series] = _sp.gamma(ss) - _lower_series(ss, xx)
    cf = ~series & ~recur
    if cf.any():
        out[cf] = _upper_cf(s_arr[cf], x_arr[cf])
    return _finish(out, scalar)


def log_upper_inc_gamma(s, x):
    """Natural log of Gamma(s, x) for ``s > 0``, safe when the value overflows.

    Args:
        s: Positive shape parameter.
        x: Non-negative argument.
    """
    scalar = np.ndim(s) == 0 and np.ndim(x) == 0
    s_arr, x_arr = _prepare(s, x)
    if np.any(s_arr <= 0):
        raise DomainError("log_upper_inc_gamma needs s > 0")
    out = np.empty(s_arr.shape)
    series = x_arr < s_arr + 1.0
    if series.any():
        ss, xx = s_arr[series], x_arr[series]
        # Gamma(s, x) = Gamma(s) (1 - P(s, x)) with P the regularised lower function
        frac = np.zeros(ss.shape)
        pos = xx > 0
        if pos.any():
            frac[pos] = np.exp(ss[pos] * np.log(xx[pos]) - xx[pos] - _sp.gammaln(ss[pos])) * _series_sum(
                ss[pos], xx[pos]
            )
        out[series] = _sp.gammaln(ss) + np.log1p(-np.minimum(frac, 1.0))
    cf = ~series
    if cf.any():
        ss, xx = s_arr[cf], x_arr[cf]
        out[cf] = ss * np.log(xx) - xx + _log_cf(ss, xx)
    if np.any(np.isnan(out)):
        raise OverflowError("log_upper_inc_gamma produced NaN")
    return float(out) if scalar else out


def c_alpha_const(alpha: float) -> float:
    """Normalising constant (int_0^inf x^(-alpha) sin x dx)^(-1), ``alpha`` in (0, 2), alpha != 1.

    Equals ``(1 - alpha) / (Gamma(2 - alpha) cos(pi alpha / 2))``.
    """
    alpha = float(alpha)
    if not math.isfinite(alpha) or not 0.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (0, 2), got {alpha}")
    if alpha == 1.0:
        raise DomainError("c_alpha_const is not defined by this formula at alpha = 1")
    return (1.0 - alpha) / (math.gamma(2.0 - alpha) * math.cos(math.pi * alpha / 2.0))
