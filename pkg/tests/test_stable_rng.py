import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from sharkswim.stable_rng import (
    ParameterError,
    RngStream,
    StableSpec,
    as_generator,
    sample_beta_binomial,
    sample_exponential,
    sample_geometric,
    sample_isotropic_stable,
    sample_mittag_leffler,
    sample_positive_stable,
    sample_symmetric_stable_1d,
    stable_cf,
)
from sharkswim.analytics import ml_moment

from _stats import within_se


class TestStableSpec:
    @pytest.mark.parametrize("alpha", [0.0, -1.0, 2.5])
    def test_alpha_range(self, alpha):
        with pytest.raises(ParameterError):
            StableSpec(alpha)

    @pytest.mark.parametrize("d", [0, 1.5, -2])
    def test_dimension(self, d):
        with pytest.raises(ParameterError):
            StableSpec(1.0, d)

    def test_negative_scale(self):
        with pytest.raises(ParameterError):
            StableSpec(1.0, 1, -0.1)

    def test_sample_scale(self):
        assert StableSpec(2.0, 1, 4.0).sample_scale == pytest.approx(2.0)


class TestStreams:
    def test_same_key_replays(self):
        a = RngStream(7, 3).random(10)
        b = RngStream(7, 3).random(10)
        assert np.array_equal(a, b)

    def test_distinct_keys_differ(self):
        assert not np.array_equal(RngStream(7, 3).random(10), RngStream(7, 4).random(10))
        assert not np.array_equal(RngStream(7, 3).random(10), RngStream(8, 3).random(10))

    def test_substream_does_not_consume_parent(self):
        s = RngStream(1)
        child = s.substream(5).random(4)
        again = RngStream(1).substream(5).random(4)
        assert np.array_equal(child, again)
        assert np.array_equal(s.random(3), RngStream(1).random(3))

    def test_distinct_streams_uncorrelated(self):
        x = RngStream(11, 0).random(20000)
        y = RngStream(11, 1).random(20000)
        assert abs(np.corrcoef(x, y)[0, 1]) < 4 / math.sqrt(20000)

    def test_sixty_four_bit_keys(self):
        s = RngStream(2**64 - 1, 2**63)
        assert s.key == (2**64 - 1, 2**63)

    def test_as_generator(self):
        g = np.random.default_rng(0)
        assert as_generator(g) is g
        assert np.array_equal(as_generator(5).random(3), RngStream(5).random(3))
        with pytest.raises(TypeError):
            as_generator("seed")


class TestIsotropicStable:
    def test_gaussian_variance(self):
        x = sample_isotropic_stable(StableSpec(2.0), RngStream(1), 100_000)[:, 0]
        # variance of the sample variance for a normal law is 2 sigma^4 / R
        se = math.sqrt(2 * 4.0 / x.size)
        assert abs(x.var(ddof=1) - 2.0) <= 3 * se

    def test_cauchy_cf(self):
        x = sample_isotropic_stable(StableSpec(1.0), RngStream(2), 100_000)[:, 0]
        ok, m, se = within_se(np.cos(x), math.exp(-1))
        assert ok, (m, se)

    def test_zero_scale_is_zero(self):
        x = sample_isotropic_stable(StableSpec(0.5, 1, 0.0), RngStream(3), 50)
        assert np.all(x == 0.0)

    def test_shapes(self):
        spec = StableSpec(1.3, 3)
        assert sample_isotropic_stable(spec, RngStream(0)).shape == (3,)
        assert sample_isotropic_stable(spec, RngStream(0), 5).shape == (5, 3)
        assert sample_isotropic_stable(spec, RngStream(0), (2, 4)).shape == (2, 4, 3)

    @pytest.mark.parametrize("alpha,d", [(0.7, 1), (1.5, 1), (0.7, 2), (1.0, 3), (1.5, 2), (2.0, 2)])
    def test_cf_on_grid(self, alpha, d):
        spec = StableSpec(alpha, d, 0.8)
        x = sample_isotropic_stable(spec, RngStream(4, int(alpha * 10) + d), 40_000)
        for t in (0.3, 1.0, 2.0):
            theta = np.zeros(d)
            theta[-1] = t
            ok, m, se = within_se(np.cos(x @ theta), stable_cf(spec, theta), 3.5)
            assert ok, (alpha, d, t, m, se)

    @pytest.mark.parametrize("alpha", [0.6, 1.0, 1.7])
    def test_stability_under_addition(self, alpha):
        spec = StableSpec(alpha, 1)
        g = RngStream(9, int(alpha * 100))
        x = sample_isotropic_stable(spec, g, 40_000)[:, 0]
        y = sample_isotropic_stable(spec, g, 40_000)[:, 0]
        z = (x + y) / 2 ** (1 / alpha)
        for t in (0.2, 0.7, 1.5):
            ok, m, se = within_se(np.cos(t * z), stable_cf(spec, t), 3.5)
            assert ok

    def test_isotropy_angles(self):
        x = sample_isotropic_stable(StableSpec(0.8, 2), RngStream(5), 100_000)
        angle = np.arctan2(x[:, 1], x[:, 0])
        counts, _ = np.histogram(angle, bins=16, range=(-math.pi, math.pi))
        assert stats.chisquare(counts).pvalue > 0.01

    def test_isotropy_sphere_d3(self):
        x = sample_isotropic_stable(StableSpec(1.4, 3), RngStream(6), 60_000)
        u = x / np.linalg.norm(x, axis=1, keepdims=True)
        # z coordinate of a uniform point on S^2 is uniform on [-1, 1]
        assert stats.kstest(u[:, 2], "uniform", args=(-1, 2)).pvalue > 0.01

    def test_rejects_bad_alpha_1d(self):
        with pytest.raises(ParameterError):
            sample_symmetric_stable_1d(2.1, RngStream(0), 3)


class TestPositiveStable:
    def test_levy_ks(self):
        # Laplace transform exp(-sqrt(lam)) is the Levy law with c = 1/2
        x = sample_positive_stable(0.5, RngStream(7), 100_000)
        assert stats.kstest(x, stats.levy(scale=0.5).cdf).pvalue > 0.01

    def test_positive(self):
        assert np.all(sample_positive_stable(0.5, RngStream(8), 10_000) > 0)
        assert np.all(sample_positive_stable(0.05, RngStream(8), 10_000) > 0)

    def test_laplace_transform(self):
        x = sample_positive_stable(0.9, RngStream(9), 100_000)
        ok, m, se = within_se(np.exp(-x), math.exp(-1))
        assert ok, (m, se)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, 1.5])
    def test_range(self, alpha):
        with pytest.raises(ParameterError):
            sample_positive_stable(alpha, RngStream(0))


class TestMittagLeffler:
    def test_mean(self):
        x = sample_mittag_leffler(0.5, RngStream(10), 100_000)
        ok, m, se = within_se(x, 2 / math.sqrt(math.pi))
        assert ok, (m, se)

    def test_second_moment(self):
        x = sample_mittag_leffler(0.5, RngStream(11), 100_000)
        ok, m, se = within_se(x**2, 2.0)
        assert ok, (m, se)

    @pytest.mark.parametrize("p", [0.3, 0.5, 0.8])
    @pytest.mark.parametrize("q", [0.5, 1.0, 2.0])
    def test_moments(self, p, q):
        x = sample_mittag_leffler(p, RngStream(12, int(p * 10)), 100_000)
        ok, m, se = within_se(x**q, ml_moment(p, q))
        assert ok, (p, q, m, se)

    def test_zeroth_moment(self):
        x = sample_mittag_leffler(0.4, RngStream(13), 100)
        assert np.mean(x**0) == 1.0

    def test_range(self):
        with pytest.raises(ParameterError):
            sample_mittag_leffler(1.0, RngStream(0))


class TestDiscreteAndOther:
    def test_geometric_mean(self):
        ok, m, se = within_se(sample_geometric(0.25, RngStream(14), 50_000), 4.0)
        assert ok

    def test_beta_binomial_mean(self):
        # urn with one black and three white, 5 draws: mean 5 * 1/4
        ok, m, se = within_se(sample_beta_binomial(5, 1, 3, RngStream(15), 50_000), 1.25)
        assert ok

    def test_exponential_rate(self):
        ok, m, se = within_se(sample_exponential(4.0, RngStream(16), 50_000), 0.25)
        assert ok

    @pytest.mark.parametrize("call", [
        lambda: sample_geometric(0.0, RngStream(0)),
        lambda: sample_beta_binomial(-1, 1, 1, RngStream(0)),
        lambda: sample_exponential(0.0, RngStream(0)),
    ])
    def test_domain(self, call):
        with pytest.raises(ParameterError):
            call()


class TestStableCF:
    def test_origin(self):
        assert stable_cf(StableSpec(2.0), 0.0) == 1.0

    def test_cauchy(self):
        assert stable_cf(StableSpec(1.0), 1.0) == pytest.approx(math.exp(-1), abs=1e-15)

    def test_scale_two(self):
        assert stable_cf(StableSpec(2.0, 1, 2.0), 1.0) == pytest.approx(math.exp(-2), abs=1e-15)

    def test_vector_norm(self):
        spec = StableSpec(1.5, 2)
        assert stable_cf(spec, [3.0, 4.0]) == pytest.approx(math.exp(-(5.0**1.5)))
        assert stable_cf(spec, np.ones((4, 2))).shape == (4,)

    @given(st.floats(0.05, 2.0), st.floats(0.0, 5.0), st.floats(0.0, 3.0))
    def test_range_and_monotone(self, alpha, c, t):
        spec = StableSpec(alpha, 1, c)
        v = stable_cf(spec, t)
        assert 0.0 <= v <= 1.0
        assert stable_cf(spec, t + 0.1) <= v

    @given(st.floats(0.1, 2.0), st.floats(0.1, 4.0), st.floats(0.1, 3.0))
    def test_scaling_rule(self, alpha, s, t):
        # multiplying samples by s multiplies the exponent coefficient by s^alpha
        assert stable_cf(StableSpec(alpha), s * t) == pytest.approx(
            stable_cf(StableSpec(alpha, 1, s**alpha), t), rel=1e-12, abs=1e-300)


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**32))
def test_reproducible_any_key(seed, stream):
    assert np.array_equal(RngStream(seed, stream).random(4), RngStream(seed, stream).random(4))
