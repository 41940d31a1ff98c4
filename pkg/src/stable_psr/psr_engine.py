"""Sampling from the Poisson series representation of a stable variable.

The series ``sum_j W_j Gamma_j^(-1/alpha) - E[W] b_j`` is split at a truncation
level ``c`` into a finite head ``X_(0,c)`` and a residual ``R_(c,inf)``.  The head
is simulated exactly; the residual is either replaced by a Gaussian with matched
mean and variance (giving ``X_hat``) or simulated as a compound Poisson sum over
``(c, d)``.

Batch samplers exploit that, given the arrival times, a sum of Gaussian weights
is Gaussian with mean ``mu_W * S1`` and variance ``sigma_W^2 * S2`` where
``S1 = sum t^(-1/alpha)`` and ``S2 = sum t^(-2/alpha)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError
from .stable_core import GaussianWParams, check_alpha

# number of series terms handled per vectorised chunk in batch samplers
_CHUNK_TERMS = 2_000_000


@dataclass(frozen=True)
class PsrConfig:
    """Truncated-series configuration.

    Attributes:
        alpha: Stability index in (0, 2), alpha != 1.
        w: Gaussian jump-weight parameters.
        c: Truncation level (expected number of retained terms).
        d: Optional far truncation level for residual simulation, ``d > c``.
    """

    alpha: float
    w: GaussianWParams
    c: float
    d: Optional[float] = None

    def __post_init__(self):
        check_alpha(self.alpha)
        if not (math.isfinite(self.c) and self.c > 0):
            raise DomainError("c must be positive and finite")
        if self.d is not None and not (math.isfinite(self.d) and self.d > self.c):
            raise DomainError("d must be finite and exceed c")


@dataclass(frozen=True)
class PsrDraw:
    """One draw of the truncated series together with its Gaussian conditional moments."""

    gammas: np.ndarray
    ws: np.ndarray
    x0c: float
    m0c: float
    s0c_sq: float


@dataclass(frozen=True)
class ResidualMoments:
    mean: float
    var: float


def b_constants_sum(alpha: float, n: int) -> float:
    """Sum of the first ``n`` centring constants: ``alpha/(alpha-1) n^((alpha-1)/alpha)`` for alpha > 1, else 0."""
    alpha = check_alpha(alpha)
    if n < 1:
        raise DomainError("n must be at least 1")
    if alpha < 1.0:
        return 0.0
    return alpha / (alpha - 1.0) * n ** ((alpha - 1.0) / alpha)


def _power_integral(p: float, lo: float, hi: float) -> float:
    """int_lo^hi t^(-p) dt for p != 1, ``hi`` may be infinite when p > 1."""
    if math.isinf(hi):
        return lo ** (1.0 - p) / (p - 1.0)
    return (hi ** (1.0 - p) - lo ** (1.0 - p)) / (1.0 - p)


def centring_offset(alpha: float, mu_w: float, d: float) -> float:
    """Compensator ``B = mu_W alpha/(alpha-1) d^((alpha-1)/alpha)`` for alpha > 1, zero otherwise."""
    if alpha < 1.0:
        return 0.0
    return mu_w * alpha / (alpha - 1.0) * d ** ((alpha - 1.0) / alpha)


def residual_moments(cfg: PsrConfig) -> ResidualMoments:
    """Mean and variance of the residual over ``(c, d)``, or ``(c, inf)`` when ``d`` is absent."""
    alpha, c = cfg.alpha, cfg.c
    mu_w, second = cfg.w.mu_w, cfg.w.second_moment
    if cfg.d is None:
        mean = mu_w * alpha / (1.0 - alpha) * c ** ((alpha - 1.0) / alpha)
        var = second * alpha / (2.0 - alpha) * c ** ((alpha - 2.0) / alpha)
    else:
        d = cfg.d
        mean = mu_w * alpha / (alpha - 1.0) * (d ** ((alpha - 1.0) / alpha) - c ** ((alpha - 1.0) / alpha))
        mean -= centring_offset(alpha, mu_w, d)
        var = second * alpha / (alpha - 2.0) * (d ** ((alpha - 2.0) / alpha) - c ** ((alpha - 2.0) / alpha))
    return ResidualMoments(mean=float(mean), var=float(var))


def sample_truncated(cfg: PsrConfig, rng: np.random.Generator) -> PsrDraw:
    """Simulate the head ``X_(0,c)`` term by term from exponential inter-arrival times."""
    alpha, c = cfg.alpha, cfg.c
    times = []
    t = rng.standard_exponential()
    while t <= c:
        times.append(t)
        t += rng.standard_exponential()
    gammas = np.asarray(times, dtype=float)
    ws = cfg.w.mu_w + cfg.w.sigma_w * rng.standard_normal(gammas.size)
    mags = gammas ** (-1.0 / alpha)
    return PsrDraw(
        gammas=gammas,
        ws=ws,
        x0c=float(np.dot(ws, mags)),
        m0c=float(cfg.w.mu_w * mags.sum()),
        s0c_sq=float(cfg.w.sigma_w ** 2 * np.sum(mags ** 2)),
    )


def sample_x_hat(cfg: PsrConfig, rng: np.random.Generator) -> float:
    """One draw of ``X_(0,c)`` plus an independent Gaussian residual with matched moments."""
    if cfg.d is not None:
        raise DomainError("sample_x_hat uses the infinite residual; leave d unset")
    head = sample_truncated(cfg, rng)
    mom = residual_moments(cfg)
    return head.x0c + mom.mean + math.sqrt(mom.var) * rng.standard_normal()


def sample_residual(cfg: PsrConfig, rng: np.random.Generator) -> float:
    """One exact compound-Poisson draw of the residual over ``(c, d)``, centred by ``B``."""
    if cfg.d is None:
        raise DomainError("sample_residual needs a finite d")
    alpha, c, d = cfg.alpha, cfg.c, cfg.d
    count = rng.poisson(d - c)
    u = rng.uniform(c, d, size=count)
    ws = cfg.w.mu_w + cfg.w.sigma_w * rng.standard_normal(count)
    return float(np.dot(ws, u ** (-1.0 / alpha)) - centring_offset(alpha, cfg.w.mu_w, d))


def default_far_level(c: float) -> float:
    """Far truncation used when simulating the infinite residual: ``max(1e6, 1e4 c)``."""
    return max(1e6, 1e4 * c)


def _power_sums(
    alpha: float, lo: float, hi: float, n: int, rng: np.random.Generator, need_first: bool
) -> tuple[np.ndarray, np.ndarray]:
    """Per-draw sums of t^(-1/alpha) and t^(-2/alpha) over a unit-rate Poisson process on (lo, hi)."""
    s1 = np.zeros(n)
    s2 = np.zeros(n)
    rate = hi - lo
    per_chunk = max(1, int(_CHUNK_TERMS / max(rate, 1.0)))
    for start in range(0, n, per_chunk):
        stop = min(n, start + per_chunk)
        counts = rng.poisson(rate, size=stop - start)
        owner = np.repeat(np.arange(stop - start), counts)
        t = rng.uniform(lo, hi, size=owner.size)
        # unordered uniforms give the same sums as ordered arrivals
        mag = t ** (-1.0 / alpha)
        s2[start:stop] = np.bincount(owner, weights=mag * mag, minlength=stop - start)
        if need_first:
            s1[start:stop] = np.bincount(owner, weights=mag, minlength=stop - start)
    return s1, s2


def sample_truncated_batch(cfg: PsrConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent draws of ``X_(0,c)``.

    Weights are drawn explicitly here: squaring the leading terms for the
    conditional variance would overflow for small alpha.
    """
    alpha, c = cfg.alpha, cfg.c
    out = np.zeros(n)
    per_chunk = max(1, int(_CHUNK_TERMS / max(c, 1.0)))
    for start in range(0, n, per_chunk):
        stop = min(n, start + per_chunk)
        counts = rng.poisson(c, size=stop - start)
        owner = np.repeat(np.arange(stop - start), counts)
        t = rng.uniform(0.0, c, size=owner.size)
        ws = cfg.w.mu_w + cfg.w.sigma_w * rng.standard_normal(owner.size)
        out[start:stop] = np.bincount(owner, weights=ws * t ** (-1.0 / alpha), minlength=stop - start)
    return out


def sample_x_hat_batch(cfg: PsrConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent draws of ``X_hat = X_(0,c) + N(m, S^2)``."""
    if cfg.d is not None:
        raise DomainError("sample_x_hat_batch uses the infinite residual; leave d unset")
    head = sample_truncated_batch(cfg, n, rng)
    mom = residual_moments(cfg)
    return head + mom.mean + math.sqrt(mom.var) * rng.standard_normal(n)


def sample_residual_batch(
    cfg: PsrConfig, n: int, rng: np.random.Generator, near_factor: Optional[float] = 10.0
) -> np.ndarray:
    """``n`` draws of the residual over ``(c, d)``.

    Arrivals in ``(c, near_factor * c)`` are simulated exactly.  Beyond that the
    power sums are replaced by a draw with the same mean and covariance: a gamma
    variate for ``S2`` and a conditionally Gaussian ``S1``.  This keeps the
    residual's second and fourth cumulants exact.  Pass ``near_factor=None``
    for fully exact simulation.
    """
    if cfg.d is None:
        raise DomainError("sample_residual_batch needs a finite d")
    alpha, c, d = cfg.alpha, cfg.c, cfg.d
    mu_w, sigma_w = cfg.w.mu_w, cfg.w.sigma_w
    need_first = mu_w != 0.0
    split = d if near_factor is None else min(d, near_factor * c)
    s1, s2 = _power_sums(alpha, c, split, n, rng, need_first)
    if split < d:
        p1, p2 = 1.0 / alpha, 2.0 / alpha
        mean2 = _power_integral(p2, split, d)
        var2 = _power_integral(2 * p2, split, d)
        shape, scale = mean2 ** 2 / var2, var2 / mean2
        far2 = rng.gamma(shape, scale, size=n)
        s2 = s2 + far2
        if need_first:
            mean1 = _power_integral(p1, split, d)
            var1 = _power_integral(2 * p1, split, d)
            cov12 = _power_integral(p1 + p2, split, d)
            slope = cov12 / var2
            resid_sd = math.sqrt(max(var1 - slope * cov12, 0.0))
            s1 = s1 + mean1 + slope * (far2 - mean2) + resid_sd * rng.standard_normal(n)
    noise = sigma_w * np.sqrt(s2) * rng.standard_normal(n)
    return mu_w * s1 + noise - centring_offset(alpha, mu_w, d)
