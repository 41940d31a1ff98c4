"""Closed-form upper bounds on Kolmogorov distances for the truncated series.

Three comparisons are covered, all for symmetric Gaussian weights:

* standardised residual against the standard normal (``bound_b1``,
  ``bound_b2``/``bound_b2_opt`` and their minimum ``bound_b4``);
* the full stable law against ``X_hat`` (``bound_b5``, via a piecewise-linear
  envelope of ``c q(u)``);
* the full stable law against the plain truncation ``X_(0,c)`` (``bound_b6``).

``choose_c`` inverts any of B4, B5 or B6 for a target accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .charfns import eta_of, g_fn, q_fn
from .errors import DomainError, UnreachableToleranceError
from .special_fn import log_upper_inc_gamma, lower_inc_gamma, upper_inc_gamma
from .stable_core import check_alpha

__all__ = [
    "BoundReport",
    "Envelope",
    "g_fn",
    "q_fn",
    "h_fn",
    "g_bar",
    "gamma_bar",
    "k_const",
    "bound_b1",
    "bound_b2",
    "bound_b2_opt",
    "bound_b4",
    "build_envelope",
    "bound_b5",
    "bound_b6",
    "c_of_alpha",
    "bound_value",
    "choose_c",
]

_DENSITY_TERM = 9.6  # 24 m with the normal density bound m < 2/5


@dataclass(frozen=True)
class BoundReport:
    name: str
    value: float
    terms: dict = field(default_factory=dict)


def gamma_bar(alpha: float) -> float:
    """``gamma(1 - a, 1)``."""
    return lower_inc_gamma(1.0 - check_alpha(alpha) / 2.0, 1.0)


def g_bar(alpha: float) -> float:
    """``g(1) = 1 - e^-1 - gamma(1 - a, 1)``, always negative."""
    return g_fn(alpha, 1.0)


def k_const(alpha: float) -> float:
    """``(1/pi) [a / (2 (2 - a)) + 1 / eta^2]``."""
    a = check_alpha(alpha) / 2.0
    eta = eta_of(alpha)
    return (a / (2.0 * (2.0 - a)) + 1.0 / eta ** 2) / math.pi


def h_fn(alpha: float, w):
    """Lower bound on ``-g``: ``-g(1) w`` on ``[0, 1]`` and ``e^-1 - 1 + gamma(1-a,1) w^a`` beyond."""
    a = check_alpha(alpha) / 2.0
    w_arr = np.asarray(w, dtype=float)
    if np.any(w_arr < 0):
        raise DomainError("w must be non-negative")
    out = np.where(
        w_arr <= 1.0,
        -g_bar(alpha) * w_arr,
        math.exp(-1.0) - 1.0 + gamma_bar(alpha) * np.maximum(w_arr, 1.0) ** a,
    )
    return float(out) if out.ndim == 0 else out


def _check_c(c: float, lower: float = 1.0) -> float:
    c = float(c)
    if not (math.isfinite(c) and c > lower):
        raise DomainError(f"c must be finite and exceed {lower}, got {c}")
    return c


def _log_tail_term(alpha: float, log_prefactor: float, scale: float) -> float:
    """log of ``exp(log_prefactor) Gamma(2/a, scale) / (a scale^(2/a))``."""
    a = alpha / 2.0
    return log_prefactor + log_upper_inc_gamma(2.0 / a, scale) - math.log(a) - (2.0 / a) * math.log(scale)


def bound_b1(alpha: float, c: float) -> BoundReport:
    """Bound on the distance between the standardised residual and N(0, 1), valid for ``c > 1``."""
    alpha = check_alpha(alpha)
    c = _check_c(c)
    gb, gam, k = g_bar(alpha), gamma_bar(alpha), k_const(alpha)
    x = (c - 1.0) * gb  # negative
    i_term = 1.0 / x ** 2 + (1.0 / x) * (1.0 - 1.0 / x) * math.exp(x)
    log_j = _log_tail_term(alpha, (1.0 - math.exp(-1.0)) * (c - 1.0), (c - 1.0) * gam)
    j_term = math.exp(log_j)
    value = c * k * (i_term + j_term)
    return BoundReport("B1", value, {"I_Z": i_term, "J_Z": j_term, "log_J_Z": log_j, "K": k, "g_bar": gb})


def bound_b2(alpha: float, c: float, delta: float) -> BoundReport:
    """Finite-smoothing bound with window ``w <= 2 - delta``, ``delta`` in (0, 2)."""
    alpha = check_alpha(alpha)
    c = _check_c(c)
    if not 0.0 < delta < 2.0:
        raise DomainError("delta must lie in (0, 2)")
    eta, k = eta_of(alpha), k_const(alpha)
    width = 2.0 - delta
    g_w = g_fn(alpha, width)
    x = g_w * (c - 1.0)
    b3 = (k / c) * (c * width / ((c - 1.0) * g_w)) ** 2 * (1.0 - (1.0 - x) * math.exp(x))
    smooth = _DENSITY_TERM * math.sqrt(eta) / (math.pi * math.sqrt(2.0 * width * c))
    return BoundReport("B2", smooth + b3, {"B3": b3, "smoothing_term": smooth, "delta": delta})


def _golden_min(fun: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = fun(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = fun(x2)
    return 0.5 * (lo + hi)


def bound_b2_opt(alpha: float, c: float) -> BoundReport:
    """B2 minimised over ``delta`` by golden-section search (after a coarse scan for the bracket)."""
    alpha = check_alpha(alpha)
    c = _check_c(c)
    edge = 1e-6
    value = lambda dl: bound_b2(alpha, c, dl).value  # noqa: E731
    grid = np.linspace(edge, 2.0 - edge, 41)
    vals = [value(dl) for dl in grid]
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    best = float(_golden_min(value, float(lo), float(hi), 1e-6))
    report = bound_b2(alpha, c, best)
    return BoundReport("B2_opt", report.value, dict(report.terms, delta_star=best))


def bound_b4(alpha: float, c: float) -> BoundReport:
    """``min(B1, B2_opt)`` with the winning branch recorded."""
    b1 = bound_b1(alpha, c)
    b2 = bound_b2_opt(alpha, c)
    branch = "B1" if b1.value <= b2.value else "B2_opt"
    return BoundReport(
        "B4", min(b1.value, b2.value), {"branch": branch, "B1": b1.value, "B2_opt": b2.value, "delta_star": b2.terms["delta_star"]}
    )


@dataclass(frozen=True)
class Envelope:
    """Piecewise-linear majorant of ``c q(u)`` on ``[0, 1]`` plus its constant tail.

    Attributes:
        knots: ``0 = u_0 < ... < u_N = 1``.
        values: ``c q(u_i)`` at the knots.
        slopes: chord slopes per segment.
        intercepts: chord intercepts per segment.
        tail: ``-c (1 - e^-1 + Gamma(1 - a, 1))``, used for ``u > 1``.
    """

    alpha: float
    c: float
    knots: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray
    tail: float

    @property
    def n(self) -> int:
        return len(self.slopes)

    def __call__(self, u):
        u_arr = np.asarray(u, dtype=float)
        idx = np.clip(np.searchsorted(self.knots, u_arr, side="right") - 1, 0, self.n - 1)
        out = np.where(u_arr > 1.0, self.tail, self.slopes[idx] * u_arr + self.intercepts[idx])
        return float(out) if out.ndim == 0 else out


def default_knots(n: int, first: float = 1e-4) -> np.ndarray:
    """``0`` followed by ``n`` log-spaced points from ``first`` to 1 (just ``[0, 1]`` when ``n = 1``)."""
    if n < 1:
        raise DomainError("n must be at least 1")
    if n == 1:
        return np.array([0.0, 1.0])
    return np.concatenate(([0.0], np.geomspace(first, 1.0, n)))


def build_envelope(alpha: float, c: float, n: int = 10, knots: Optional[np.ndarray] = None) -> Envelope:
    alpha = check_alpha(alpha)
    c = _check_c(c, 0.0)
    u = default_knots(n) if knots is None else np.asarray(knots, dtype=float)
    if u[0] != 0.0 or u[-1] != 1.0 or np.any(np.diff(u) <= 0):
        raise DomainError("knots must increase from 0 to 1")
    f = c * np.asarray(q_fn(alpha, u))
    slopes = np.diff(f) / np.diff(u)
    intercepts = f[:-1] - slopes * u[:-1]
    a = alpha / 2.0
    tail = -c * ((1.0 - math.exp(-1.0)) + upper_inc_gamma(1.0 - a, 1.0))
    return Envelope(alpha, c, u, f, slopes, intercepts, tail)


def bound_b5(alpha: float, c: float, n: int = 10, envelope: Optional[Envelope] = None) -> BoundReport:
    """Bound on the distance between the stable law and ``X_hat``, valid for ``c > 1``."""
    alpha = check_alpha(alpha)
    c = _check_c(c)
    env = build_envelope(alpha, c, n) if envelope is None else envelope
    gb, gam, k = g_bar(alpha), gamma_bar(alpha), k_const(alpha)
    m_t = env.slopes + (c - 1.0) * gb
    u0, u1 = env.knots[:-1], env.knots[1:]
    # int_{u0}^{u1} u exp(m u + q) du, written to avoid overflow
    upper = np.exp(env.intercepts + m_t * u1) * (u1 - 1.0 / m_t)
    lower = np.exp(env.intercepts + m_t * u0) * (u0 - 1.0 / m_t)
    pieces = (upper - lower) / m_t
    i_term = float(np.sum(pieces))
    k_t = env.tail - (c - 1.0) * (math.exp(-1.0) - 1.0)
    l_t = (c - 1.0) * gam
    j_term = math.exp(_log_tail_term(alpha, k_t, l_t))
    value = c * k * (i_term + j_term)
    return BoundReport("B5", value, {"I_X": i_term, "J_X": j_term, "n": env.n})


def bound_b6(alpha: float, c: float) -> BoundReport:
    """Bound on the distance between the stable law and the plain truncation ``X_(0,c)``, ``c > 0``."""
    alpha = check_alpha(alpha)
    c = _check_c(c, 0.0)
    fourth = alpha / (4.0 - alpha) * c ** ((alpha - 4.0) / alpha)
    second = alpha / (2.0 - alpha) * c ** ((alpha - 2.0) / alpha)
    log_gamma = math.lgamma((alpha + 4.0) / alpha)
    root = math.exp(0.5 * (log_gamma + math.log(fourth + second ** 2)))
    value = math.exp(-0.5) / math.sqrt(2.0 * math.pi) * root
    return BoundReport("B6", value, {"fourth_moment_term": fourth, "variance_term": second})


def c_of_alpha(alpha: float) -> float:
    """Truncation level above which the Gaussian residual provably improves the smoothing integral."""
    return -math.log(2.0) / g_bar(alpha)


_BOUNDS = {
    "B4": lambda alpha, c, n: bound_b4(alpha, c).value,
    "B5": lambda alpha, c, n: bound_b5(alpha, c, n).value,
    "B6": lambda alpha, c, n: bound_b6(alpha, c).value,
}


def bound_value(bound_name: str, alpha: float, c: float, n_envelope: int = 10) -> float:
    """Value of B4, B5 (with ``n_envelope`` segments) or B6 selected by name."""
    key = bound_name.upper()
    if key not in _BOUNDS:
        raise DomainError(f"unknown bound {bound_name!r}; expected one of {sorted(_BOUNDS)}")
    return _BOUNDS[key](alpha, c, n_envelope)


def choose_c(alpha: float, epsilon: float, bound_name: str = "B5", n_envelope: int = 10, c_max: float = 1e12) -> float:
    """Smallest truncation level whose bound does not exceed ``epsilon``.

    Doubles ``c`` from 2 until the bound drops below ``epsilon``, then bisects
    to a relative width of ``1e-7``.

    Raises:
        UnreachableToleranceError: the bound stays above ``epsilon`` up to ``c_max``.
    """
    alpha = check_alpha(alpha)
    if not 0.0 < epsilon < 1.0:
        raise DomainError("epsilon must lie in (0, 1)")
    key = bound_name.upper()
    if key not in _BOUNDS:
        raise DomainError(f"unknown bound {bound_name!r}; expected one of {sorted(_BOUNDS)}")
    bound = lambda c: _BOUNDS[key](alpha, c, n_envelope)  # noqa: E731
    lo = 2.0
    if bound(lo) <= epsilon:
        return lo
    hi = 2.0 * lo
    best = (lo, bound(lo))
    while True:
        val = bound(hi)
        best = (hi, val)
        if val <= epsilon:
            break
        if hi >= c_max:
            raise UnreachableToleranceError(
                f"{key} stays above {epsilon} for c up to {c_max:g}", best_c=best[0], best_bound=best[1]
            )
        lo, hi = hi, min(2.0 * hi, c_max)
    while (hi - lo) > 1e-7 * hi:
        mid = 0.5 * (lo + hi)
        if bound(mid) <= epsilon:
            hi = mid
        else:
            lo = mid
    return hi
