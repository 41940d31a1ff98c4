import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from stable_psr.charfns import CfPoint, eta_of, log_cf_X0c_closed, log_cf_X_closed, log_cf_Z_closed, log_cf_x_hat
from stable_psr.distance import (
    CF_NAMES,
    NORMAL_DENSITY_BOUND,
    cf_gap_modulus,
    esseen_bound,
    gk15_adaptive,
    ks_one_sample,
    ks_two_sample,
    stable_tail_limit,
    tail_truncation,
)
from stable_psr.errors import ConvergenceError, DomainError


def qbar_in_s(log_cf_1, log_cf_2, to_x, s_max):
    """(2 / pi) int_0^s_max |phi_1 - phi_2| / s ds by scipy quad in the original frequency."""
    def f(s):
        x = to_x(s)
        return abs(math.exp(log_cf_1(x)) - math.exp(log_cf_2(x))) / s

    edges = np.concatenate(([0.0], np.geomspace(1e-3, s_max, 40)))
    total = sum(integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-11, limit=200)[0] for lo, hi in zip(edges[:-1], edges[1:]))
    return 2.0 * total / math.pi


class TestGaussKronrod:
    @pytest.mark.parametrize(
        "f,a,b",
        [
            (np.sin, 0.0, math.pi),
            (lambda x: np.exp(-x * x), -5.0, 7.0),
            (lambda x: np.sqrt(np.abs(x - 0.3)), 0.0, 1.0),
            (lambda x: 1.0 / (1e-3 + (x - 0.5) ** 2), 0.0, 1.0),
        ],
    )
    def test_against_scipy(self, f, a, b):
        value, err = gk15_adaptive(f, a, b, abs_tol=1e-10)
        ref = integrate.quad(lambda t: float(f(np.array([t]))[0]), a, b, epsabs=1e-13, epsrel=1e-13, limit=500, points=[0.3, 0.5] if a < 0.3 < b else None)[0]
        assert value == pytest.approx(ref, abs=1e-9)
        assert err <= 1e-10

    def test_polynomial_exact(self):
        value, err = gk15_adaptive(lambda x: 3 * x ** 5 - x ** 2 + 1, -1.0, 2.0, initial=1)
        assert value == pytest.approx(3 * (64 - 1) / 6 - (8 + 1) / 3 + 3, rel=1e-14)

    def test_non_convergence_reported(self):
        with pytest.raises(ConvergenceError, match="abs_err"):
            gk15_adaptive(lambda x: np.sign(np.sin(1e4 * x)), 0.0, 1.0, abs_tol=1e-14, max_intervals=64)


class TestEsseen:
    def test_identical_with_finite_theta(self):
        est = esseen_bound(("Z", "Z"), 1.2, 10.0, theta=10.0, density_bound_m=NORMAL_DENSITY_BOUND)
        assert est.value == 24 * NORMAL_DENSITY_BOUND / (math.pi * 10.0)
        assert est.theta == 10.0

    @pytest.mark.parametrize("name", CF_NAMES)
    def test_self_distance_zero(self, name):
        est = esseen_bound((name, name), 0.8, 10.0)
        assert est.value == 0.0 and est.abs_err == 0.0

    @pytest.mark.parametrize("pair", [("X", "X_hat"), ("X", "X_0c"), ("Z_c", "Z"), ("R", "R_hat")])
    def test_symmetric_in_arguments(self, pair):
        a = esseen_bound(pair, 1.3, 10.0)
        b = esseen_bound(pair[::-1], 1.3, 10.0)
        assert a.value == pytest.approx(b.value, abs=1e-12)

    @pytest.mark.parametrize("alpha", [0.5, 1.2, 1.7])
    @pytest.mark.parametrize("c", [3.0, 30.0])
    def test_residual_pair_against_scipy_in_s(self, alpha, c):
        est = esseen_bound(("Z_c", "Z"), alpha, c)
        assert est.abs_err < 1e-8
        s_max = math.sqrt(2 * c * est.upper_limit / eta_of(alpha))
        ref = qbar_in_s(
            lambda w: log_cf_Z_closed(alpha, c, w),
            lambda w: -c * w / eta_of(alpha),
            lambda s: CfPoint.from_s(alpha, c, 1.0, s).w,
            s_max,
        )
        assert est.value == pytest.approx(ref, abs=1e-8)

    @pytest.mark.parametrize("alpha", [0.6, 1.4])
    def test_stable_pairs_against_scipy_in_s(self, alpha):
        c, sd = 10.0, 1.0
        to_u = lambda s: CfPoint.from_s(alpha, c, sd, s).u  # noqa: E731
        full = lambda u: log_cf_X_closed(alpha, c, u)  # noqa: E731
        for pair, other in ((("X", "X_hat"), lambda u: log_cf_x_hat(alpha, c, u)), (("X", "X_0c"), lambda u: log_cf_X0c_closed(alpha, c, u))):
            est = esseen_bound(pair, alpha, c)
            s_max = math.sqrt(2 * est.upper_limit) * c ** (1 / alpha) / sd
            ref = qbar_in_s(full, other, to_u, s_max)
            assert est.value == pytest.approx(ref, rel=1e-6, abs=1e-8)

    @pytest.mark.parametrize("alpha", [0.4, 1.1, 1.8])
    def test_large_theta_limit(self, alpha):
        c = 20.0
        inf = esseen_bound(("Z_c", "Z"), alpha, c)
        fin = esseen_bound(("Z_c", "Z"), alpha, c, theta=1e4)
        margin = 24 * NORMAL_DENSITY_BOUND / (math.pi * 1e4) + 2 * (inf.abs_err + fin.abs_err)
        assert abs(fin.value - inf.value) < margin

    def test_finite_theta_only_for_gaussian_target(self):
        with pytest.raises(DomainError):
            esseen_bound(("X", "X_hat"), 1.2, 10.0, theta=10.0)
        with pytest.raises(DomainError):
            esseen_bound(("Z_c", "Z"), 1.2, 10.0, theta=0.0)

    def test_unknown_or_mixed_pairs(self):
        with pytest.raises(DomainError):
            esseen_bound(("X", "Y"), 1.2, 10.0)
        with pytest.raises(DomainError):
            esseen_bound(("X", "Z"), 1.2, 10.0)
        with pytest.raises(DomainError):
            esseen_bound(("X",), 1.2, 10.0)

    @settings(max_examples=25, deadline=None)
    @given(alpha=st.sampled_from([0.3, 0.7, 1.3, 1.9]), c=st.floats(min_value=1.5, max_value=500.0))
    def test_nonnegative_and_converged(self, alpha, c):
        for pair in (("Z_c", "Z"), ("X", "X_hat")):
            est = esseen_bound(pair, alpha, c)
            assert est.value >= 0 and 0 <= est.abs_err < 1e-8


class TestGapModulus:
    def test_matches_direct_difference(self):
        u = np.geomspace(1e-3, 10.0, 30)
        direct = np.abs(np.exp(log_cf_X_closed(1.2, 5.0, u)) - np.exp(log_cf_x_hat(1.2, 5.0, u)))
        np.testing.assert_allclose(cf_gap_modulus(("X", "X_hat"), 1.2, 5.0, u), direct, rtol=1e-9, atol=1e-16)

    def test_small_frequency_no_cancellation(self):
        # the two log-CFs agree to second order, so the gap is far below the values themselves
        gap = cf_gap_modulus(("Z_c", "Z"), 1.2, 10.0, np.array([1e-10]))[0]
        assert 0 < gap < 1e-15


class TestTailTruncation:
    def test_stable_example(self):
        s_star = stable_tail_limit(1.2, 1.0)
        assert math.exp(-(s_star ** 1.2)) / s_star == pytest.approx(1e-14, rel=1e-9)

    def test_slower_decay_needs_larger_limit(self):
        limits = [stable_tail_limit(a, 1.0) for a in (1.8, 1.2, 0.8, 0.4)]
        assert np.all(np.diff(limits) > 0)

    @pytest.mark.parametrize("pair", [("X", "X_hat"), ("X", "X_0c"), ("Z_c", "Z")])
    @pytest.mark.parametrize("alpha", [0.3, 1.2, 1.9])
    def test_integrand_small_beyond(self, pair, alpha):
        upper = tail_truncation(pair, alpha, 10.0)
        for factor in (1.0, 2.0, 10.0):
            x = factor * upper
            assert cf_gap_modulus(pair, alpha, 10.0, np.array([x]))[0] / (math.pi * x) < 1e-14


class TestKolmogorov:
    def test_identical_two_sample(self):
        x = np.random.default_rng(0).standard_normal(1000)
        assert ks_two_sample(x, x.copy()) == 0.0

    def test_normal_one_sample(self):
        n = 100_000
        x = np.random.default_rng(1).standard_normal(n)
        assert ks_one_sample(x, stats.norm.cdf) < 1.63 / math.sqrt(n)

    def test_against_scipy(self):
        rng = np.random.default_rng(2)
        a, b = rng.standard_normal(500), rng.standard_normal(700) + 0.1
        assert ks_two_sample(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-15)
        assert ks_one_sample(a, stats.norm.cdf) == pytest.approx(stats.kstest(a, "norm").statistic, abs=1e-15)

    def test_ties(self):
        assert ks_two_sample([0.0, 0.0, 1.0], [0.0, 1.0, 1.0]) == pytest.approx(1 / 3)

    def test_empty(self):
        with pytest.raises(DomainError):
            ks_one_sample([], stats.norm.cdf)
        with pytest.raises(DomainError):
            ks_two_sample([1.0], [])
