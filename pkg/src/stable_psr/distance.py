"""Smoothing-lemma integrals and empirical Kolmogorov statistics.

For two characteristic functions the smoothing inequality bounds the
Kolmogorov distance by

    (1/pi) int_{-Theta}^{Theta} |phi_S(s) - phi_T(s)| / |s| ds + 24 m / (pi Theta).

For the symmetric closed forms every CF is a function of a scaled squared
frequency (``u`` or ``w``), where ``ds / |s|`` becomes ``dx / (2x)``; the two
half-lines then give ``(1/pi) int |...| / x dx``.  Integration is carried out in
``log x`` with an adaptive Gauss-Kronrod (7, 15) rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .charfns import eta_of, g_fn, g_shift_fn, q_fn, stable_power_fn
from .errors import ConvergenceError, DomainError
from .stable_core import check_alpha

NORMAL_DENSITY_BOUND = 1.0 / math.sqrt(2.0 * math.pi)

# Kronrod abscissae and weights on [-1, 1] (positive half, centre last), Gauss weights at odd nodes
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate((-_XK[:-1], _XK[::-1]))
_KW = np.concatenate((_WK[:-1], _WK[::-1]))
# Gauss nodes are the odd Kronrod nodes: indices 1, 3, 5 on each side plus the centre
_GW = np.zeros(15)
_GW[[1, 3, 5]] = _WG[:3]
_GW[7] = _WG[3]
_GW[[9, 11, 13]] = _WG[2::-1]


def _gk15(f: Callable[[np.ndarray], np.ndarray], lo: np.ndarray, hi: np.ndarray):
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = centre[:, None] + half[:, None] * _NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    kron = half * (fx @ _KW)
    gauss = half * (fx @ _GW)
    return kron, np.abs(kron - gauss)


def gk15_adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    abs_tol: float = 1e-8,
    max_intervals: int = 10_000,
    initial: int = 16,
) -> tuple[float, float]:
    """Globally adaptive Gauss-Kronrod quadrature of a vectorised ``f`` on ``[a, b]``.

    The intervals with the largest error estimates are bisected until the summed
    estimate is below ``abs_tol``.

    Returns:
        ``(value, abs_err)``

    Raises:
        ConvergenceError: ``max_intervals`` reached without meeting ``abs_tol``.
    """
    edges = np.linspace(a, b, initial + 1)
    lo, hi = edges[:-1], edges[1:]
    vals, errs = _gk15(f, lo, hi)
    while errs.sum() > abs_tol:
        if lo.size >= max_intervals:
            raise ConvergenceError(
                f"quadrature stopped at {lo.size} subintervals with abs_err={errs.sum():.3g}"
            )
        n_split = max(1, min(lo.size // 4 + 1, max_intervals - lo.size))
        worst = np.argsort(errs)[-n_split:]
        keep = np.ones(lo.size, dtype=bool)
        keep[worst] = False
        mid = 0.5 * (lo[worst] + hi[worst])
        new_lo = np.concatenate((lo[worst], mid))
        new_hi = np.concatenate((mid, hi[worst]))
        new_vals, new_errs = _gk15(f, new_lo, new_hi)
        lo = np.concatenate((lo[keep], new_lo))
        hi = np.concatenate((hi[keep], new_hi))
        vals = np.concatenate((vals[keep], new_vals))
        errs = np.concatenate((errs[keep], new_errs))
    return float(vals.sum()), float(errs.sum())


# Each symmetric log-CF is c * (kg * g(x) - kp * x^a Gamma(1-a) - kl * x / eta).
_CF_TABLE = {
    "X": ("u", (0, 1, 0)),
    "X_0c": ("u", (-1, 1, 0)),
    "X_hat": ("u", (-1, 1, 1)),
    "R": ("u", (1, 0, 0)),
    "R_hat": ("u", (0, 0, 1)),
    "Z_c": ("w", (1, 0, 0)),
    "Z": ("w", (0, 0, 1)),
}

CF_NAMES = tuple(_CF_TABLE)


@dataclass(frozen=True)
class EsseenEstimate:
    value: float
    abs_err: float
    theta: float
    integrand_id: str
    upper_limit: float


def _resolve_pair(cf_pair) -> tuple[str, tuple, tuple]:
    if len(cf_pair) != 2:
        raise DomainError("cf_pair must name two characteristic functions")
    first, second = cf_pair
    for name in cf_pair:
        if name not in _CF_TABLE:
            raise DomainError(f"unknown CF {name!r}; expected one of {CF_NAMES}")
    var1, k1 = _CF_TABLE[first]
    var2, k2 = _CF_TABLE[second]
    if var1 != var2:
        raise DomainError(f"{first} and {second} are expressed in different variables")
    return var1, k1, k2


def _log_cf(alpha: float, c: float, coeffs: tuple, x: np.ndarray) -> np.ndarray:
    kg, kp, kl = coeffs
    out = np.zeros_like(x)
    if kp and kg == -kp:
        # -g - u^a Gamma(1-a) cancels badly for large u; q evaluates it directly
        out = out + kp * np.asarray(q_fn(alpha, x))
    else:
        if kg:
            out = out + kg * np.asarray(g_fn(alpha, x))
        if kp:
            out = out - kp * np.asarray(stable_power_fn(alpha, x))
    if kl:
        out = out - kl * x / eta_of(alpha)
    return c * out


def _log_cf_gap(alpha: float, c: float, k1: tuple, k2: tuple, x: np.ndarray) -> np.ndarray:
    """``log phi_1 - log phi_2`` computed without cancellation near zero."""
    dg, dp, dl = (p - q for p, q in zip(k1, k2))
    out = np.zeros_like(x)
    if dg and dl == -dg:
        out = out + dg * np.asarray(g_shift_fn(alpha, x))
    else:
        if dg:
            out = out + dg * np.asarray(g_fn(alpha, x))
        if dl:
            out = out - dl * x / eta_of(alpha)
    if dp:
        out = out - dp * np.asarray(stable_power_fn(alpha, x))
    return c * out


def cf_gap_modulus(cf_pair, alpha: float, c: float, x) -> np.ndarray:
    """``|phi_S - phi_T|`` for a symmetric pair at scaled frequencies ``x``."""
    alpha = check_alpha(alpha)
    _, k1, k2 = _resolve_pair(cf_pair)
    x = np.asarray(x, dtype=float)
    l1 = _log_cf(alpha, c, k1, x)
    l2 = _log_cf(alpha, c, k2, x)
    gap = np.abs(_log_cf_gap(alpha, c, k1, k2, x))
    return np.exp(np.maximum(l1, l2)) * -np.expm1(-gap)


def tail_truncation(cf_pair, alpha: float, c: float, tol: float = 1e-14) -> float:
    """Upper limit beyond which the smoothing integrand stays below ``tol``.

    The limit is expressed in the pair's own scaled variable (``u`` or ``w``).
    The bound ``(|phi_S| + |phi_T|) / (pi x)`` is decreasing, so the search is
    a doubling bracket followed by bisection on ``log x``.
    """
    alpha = check_alpha(alpha)
    _, k1, k2 = _resolve_pair(cf_pair)

    def envelope(x: float) -> float:
        xs = np.array([x])
        mods = np.exp(_log_cf(alpha, c, k1, xs)) + np.exp(_log_cf(alpha, c, k2, xs))
        return float(mods[0]) / (math.pi * x)

    hi = 1.0
    while envelope(hi) >= tol:
        hi *= 2.0
        if hi > 1e300:
            raise ConvergenceError("integrand does not decay below the tolerance")
    lo = hi / 2.0
    if envelope(lo) < tol:
        return lo
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if envelope(mid) < tol:
            hi = mid
        else:
            lo = mid
        if hi / lo - 1.0 < 1e-10:
            break
    return hi


def stable_tail_limit(alpha: float, sigma: float, tol: float = 1e-14) -> float:
    """Frequency ``S`` with ``exp(-(sigma S)^alpha) / S = tol`` for a symmetric stable CF."""
    alpha = check_alpha(alpha)
    f = lambda log_s: -((sigma * math.exp(log_s)) ** alpha) - log_s - math.log(tol)  # noqa: E731
    lo, hi = math.log(1e-300) / 2.0, 0.0
    while f(hi) > 0:
        hi += 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return math.exp(hi)


def esseen_bound(
    cf_pair,
    alpha: float,
    c: float,
    theta: float = math.inf,
    density_bound_m: float = NORMAL_DENSITY_BOUND,
    abs_tol: float = 1e-8,
    small: float = 1e-12,
) -> EsseenEstimate:
    """Smoothing-lemma estimate for a pair of symmetric closed-form CFs.

    With ``theta = inf`` returns the improper integral alone; with finite
    ``theta`` (only for pairs in the ``w`` variable, whose target is standard
    normal) adds ``24 m / (pi theta)``.

    Args:
        cf_pair: Two names from :data:`CF_NAMES`.
        alpha: Stability index.
        c: Truncation level.
        theta: Smoothing frequency in the original ``s`` variable.
        density_bound_m: Bound on the target density, used for finite ``theta``.
        abs_tol: Target absolute accuracy of the quadrature.
        small: Below this scaled frequency the integrand is replaced by its
            leading power-law behaviour and integrated analytically.
    """
    alpha = check_alpha(alpha)
    if not c > 0:
        raise DomainError("c must be positive")
    var, _, _ = _resolve_pair(cf_pair)
    pair_id = f"{cf_pair[0]}|{cf_pair[1]}"
    if math.isinf(theta):
        upper = tail_truncation(cf_pair, alpha, c)
        extra = 0.0
    else:
        if var != "w":
            raise DomainError("finite theta is only available for pairs with a Gaussian target (Z_c, Z)")
        if not theta > 0:
            raise DomainError("theta must be positive")
        upper = eta_of(alpha) * theta * theta / (2.0 * c)
        extra = 24.0 * density_bound_m / (math.pi * theta)
    if upper <= small:
        return EsseenEstimate(extra, 0.0, theta, pair_id, upper)

    def integrand(log_x: np.ndarray) -> np.ndarray:
        return cf_gap_modulus(cf_pair, alpha, c, np.exp(log_x)) / math.pi

    value, err = gk15_adaptive(integrand, math.log(small), math.log(upper), abs_tol=abs_tol)
    # near zero the integrand behaves like x^p; integrate that piece exactly
    f1, f2 = integrand(np.log([small, small / 2.0]))
    patch = 0.0
    if f1 > 0 and f2 > 0:
        power = math.log(f1 / f2) / math.log(2.0)
        if power > 0:
            patch = f1 / power
    return EsseenEstimate(float(value + patch + extra), float(err + patch), theta, pair_id, float(upper))


def ks_one_sample(samples, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Kolmogorov statistic between the empirical CDF of ``samples`` and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise DomainError("samples must be non-empty")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_two_sample(a, b) -> float:
    """Kolmogorov statistic between two empirical CDFs (right-continuous)."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise DomainError("samples must be non-empty")
    z = np.concatenate((a, b))
    fa = np.searchsorted(a, z, side="right") / a.size
    fb = np.searchsorted(b, z, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))
