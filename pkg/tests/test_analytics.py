import json
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from sharkswim import analytics as an
from sharkswim.analytics import (
    DomainError,
    MomentQuery,
    QuadratureConfig,
    SupportWarning,
    adaptive_simpson,
    beta_binomial_moment,
    beta_binomial_pmf,
    c_constant,
    constants_table,
    critical_constant,
    dumps_constants,
    f_integrand,
    geometric_alpha_moment,
    ml_moment,
    regime,
    root_cluster_moment,
    squared_cluster_sum_mean,
    xi_moment,
    xi_moment_partial_sums,
)
from sharkswim.rrt import enumerate_exact

# Reference values computed with mpmath at 30-40 digits (gamma, polylog, quad)
C_REFERENCE = {
    ("1.5", "1/3"): 1.508651332238,
    ("0.5", "0.5"): 0.640689133735777,
    ("1.25", "0.5"): 1.4334475087297,
    ("0.5", "0.25"): 0.839575307724941,
    ("1.5", "0.5"): 2.43867189096242,
}
ROOT_MOMENT_REFERENCE = {
    (10**9, 0.3): (558.44412039009774, 561689.6321349594),
    (10**9, 0.75): (6118640.5571956531, 47576636996607.914),
    (12345, 0.5): (125.37074568292449, 24564.629254317076),
}
GEOMETRIC_REFERENCE = {
    (0.3, 1.5): 7.4864668098321079,
    (0.01, 0.5): 8.8825232674579793,
    (0.001, 1.7): 194396.36365519722519,
    (0.2, 0.3): 1.505896323587399,
}


class TestBetaBinomial:
    def test_one_draw(self):
        assert beta_binomial_pmf(1, 1, 0) == pytest.approx(0.5)
        assert beta_binomial_pmf(1, 1, 1) == pytest.approx(0.5)

    def test_two_draws_all_black(self):
        assert beta_binomial_pmf(2, 1, 2) == pytest.approx(1 / 3)

    @given(st.integers(0, 60), st.integers(1, 40))
    def test_normalised(self, n, m):
        total = sum(beta_binomial_pmf(n, m, i) for i in range(n + 1))
        assert abs(total - 1.0) < 1e-12

    def test_out_of_support(self):
        with pytest.warns(SupportWarning):
            assert beta_binomial_pmf(3, 2, 4) == 0.0
        with pytest.warns(SupportWarning):
            assert beta_binomial_pmf(3, 2, -1) == 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            beta_binomial_pmf(3, 0, 1)

    @pytest.mark.parametrize("n,k", [(3, 2), (5, 2), (9, 4), (20, 7)])
    def test_second_moment_closed_form(self, n, k):
        # counts of later nodes joining node k's subtree: n-k draws, k-1 whites
        closed = (n - k) * (2 * (n - k) + k - 1) / (k * (k + 1))
        assert beta_binomial_moment(n - k, k - 1, 2) == pytest.approx(closed, rel=1e-12)

    def test_second_moment_example(self):
        assert beta_binomial_moment(1, 1, 2) == pytest.approx(0.5)

    def test_urn_enumeration(self):
        # exact urn path probabilities for n=3 draws with 1 black, 2 white
        law = {0: Fraction(0)}
        def walk(b, w, left, i, pr):
            if left == 0:
                law[i] = law.get(i, 0) + pr
                return
            walk(b + 1, w, left - 1, i + 1, pr * Fraction(b, b + w))
            walk(b, w + 1, left - 1, i, pr * Fraction(w, b + w))
        walk(1, 2, 3, 0, Fraction(1))
        for i, pr in law.items():
            assert beta_binomial_pmf(3, 2, i) == pytest.approx(float(pr), abs=1e-14)


class TestRootClusterMoment:
    def test_single_node(self):
        assert root_cluster_moment(1, 0.37, 1) == pytest.approx(1.0)
        assert root_cluster_moment(1, 0.37, 2) == pytest.approx(1.0)

    def test_two_nodes(self):
        assert root_cluster_moment(2, 0.5, 1) == pytest.approx(1.5)
        assert root_cluster_moment(2, 0.5, 2) == pytest.approx(2.5)

    def test_three_nodes(self):
        assert root_cluster_moment(3, 0.5, 1) == pytest.approx(1.875, abs=1e-14)

    @pytest.mark.parametrize("key", sorted(ROOT_MOMENT_REFERENCE))
    def test_large_n_precision(self, key):
        n, p = key
        m1, m2 = ROOT_MOMENT_REFERENCE[key]
        assert abs(root_cluster_moment(n, p, 1) / m1 - 1) < 1e-10
        assert abs(root_cluster_moment(n, p, 2) / m2 - 1) < 1e-10

    @pytest.mark.parametrize("n", [2, 4, 6])
    @pytest.mark.parametrize("p", ["1/4", "1/2", "3/4"])
    def test_matches_enumeration(self, n, p):
        law = enumerate_exact(n, p).root_law()
        m1 = sum(s * pr for s, pr in law.items())
        m2 = sum(s * s * pr for s, pr in law.items())
        assert abs(float(m1) - root_cluster_moment(n, float(Fraction(p)), 1)) < 1e-10
        assert abs(float(m2) - root_cluster_moment(n, float(Fraction(p)), 2)) < 1e-10

    def test_bad_order(self):
        with pytest.raises(DomainError):
            root_cluster_moment(3, 0.5, 3)


class TestSquaredClusterSum:
    @pytest.mark.parametrize("n", [1, 2, 5, 7])
    @pytest.mark.parametrize("p", ["1/4", "1/2", "3/4"])
    def test_matches_enumeration(self, n, p):
        law = enumerate_exact(n, p)
        exact = law.expect(lambda sizes: sum(s * s for s in sizes))
        assert squared_cluster_sum_mean(n, float(Fraction(p))) == pytest.approx(float(exact), rel=1e-12)

    def test_recursion(self):
        a = 1.0
        for n in range(1, 300):
            assert squared_cluster_sum_mean(n, 0.3) == pytest.approx(a, rel=1e-11)
            a = (1 + 0.6 / n) * a + 1


class TestMoments:
    def test_ml(self):
        assert ml_moment(0.7, 0.0) == 1.0
        assert ml_moment(0.5, 2.0) == pytest.approx(2.0)
        assert ml_moment(0.5, 1.0) == pytest.approx(2 / math.sqrt(math.pi))

    def test_xi(self):
        assert xi_moment(2, 0.3, 0.0) == pytest.approx(0.7)
        assert xi_moment(2, 0.5, 2.0) == pytest.approx(0.5)
        assert xi_moment(1, 0.5, 2.0) == ml_moment(0.5, 2.0)

    def test_query_routes(self):
        assert MomentQuery(0.5, 2.0, 1).value() == ml_moment(0.5, 2.0)
        assert MomentQuery(0.5, 2.0, 3).value() == xi_moment(3, 0.5, 2.0)
        with pytest.raises(DomainError):
            MomentQuery(1.2)

    def test_partial_sums_converge(self):
        s = xi_moment_partial_sums(0.75, 2.0, [10, 10**3, 10**6])
        assert s[0] < s[1] < s[2]
        assert xi_moment(10**6, 0.75, 2.0) < 1e-6
        assert s[1] == pytest.approx(sum(xi_moment(i, 0.75, 2.0) for i in range(2, 1001)), rel=1e-12)


class TestGeometric:
    def test_trivial(self):
        assert geometric_alpha_moment(1.0, 0.7) == 1.0
        assert geometric_alpha_moment(0.5, 1.0) == 2.0
        assert geometric_alpha_moment(0.5, 2.0) == 6.0

    def test_domain(self):
        with pytest.raises(DomainError):
            geometric_alpha_moment(0.0, 1.0)

    @pytest.mark.parametrize("key", sorted(GEOMETRIC_REFERENCE))
    def test_reference(self, key):
        r, a = key
        assert geometric_alpha_moment(r, a) == pytest.approx(GEOMETRIC_REFERENCE[key], rel=1e-10)

    @given(st.floats(0.001, 0.999), st.floats(0.05, 1.95))
    def test_routes_agree_near_switch(self, r, a):
        # the series and polylog branches must agree where both are valid
        if 0.04 < r < 0.07:
            series = an._geometric_series(r, a, 1e-13)
            poly = an._geometric_polylog(r, a)
            assert poly == pytest.approx(series, rel=1e-9)

    @given(st.floats(0.05, 1.0), st.floats(0.05, 0.95), st.floats(0.01, 1.0))
    def test_bound_alpha_at_most_one(self, alpha, p, u):
        # Jensen: E[G^alpha] <= (E G)^alpha = ((1-p)/x)^(alpha p) for alpha <= 1
        x = u * (1 - p)
        assert f_integrand(x, alpha, p) <= ((1 - p) / x) ** (alpha * p) * (1 + 1e-10)

    @given(st.floats(1.0, 2.0), st.floats(0.05, 0.95), st.floats(0.01, 1.0))
    def test_bound_alpha_above_one(self, alpha, p, u):
        # log-convexity of moments between orders 1 and 2 gives the factor 2^(alpha-1)
        x = u * (1 - p)
        bound = 2 ** (alpha - 1) * ((1 - p) / x) ** (alpha * p)
        assert f_integrand(x, alpha, p) <= bound * (1 + 1e-10)

    def test_plain_bound_fails_for_alpha_two(self):
        # E[G^2] = (2-r)/r^2 exceeds r^-2 whenever r < 1
        x, p = 0.2, 0.5
        assert f_integrand(x, 2.0, p) > ((1 - p) / x) ** (2 * p)

    @given(st.floats(0.02, 0.98), st.floats(0.1, 1.9))
    def test_monotone_in_r(self, r, a):
        assert geometric_alpha_moment(r, a) >= geometric_alpha_moment(min(1.0, r + 0.01), a) - 1e-9


class TestConstants:
    def test_alpha_one(self):
        for p in (0.1, 0.5, 0.9):
            assert c_constant(1, p) == 1.0

    def test_alpha_two(self):
        assert c_constant(2, 0.25) == pytest.approx(2.0, abs=1e-15)
        assert c_constant(2, 0.01) == pytest.approx(2 * 0.99 / 0.98 - 1, rel=1e-14)

    @pytest.mark.parametrize("key", sorted(C_REFERENCE))
    def test_quadrature_reference(self, key):
        a, p = key
        assert c_constant(a, p) == pytest.approx(C_REFERENCE[key], rel=1e-8)

    @pytest.mark.parametrize("alpha,p", [(1.0, 0.4), (2.0, 0.3), (2.0, 0.45)])
    def test_quadrature_anchored_by_closed_forms(self, alpha, p):
        q = an._c_quadrature(alpha, p, QuadratureConfig())
        assert q == pytest.approx(c_constant(alpha, p), rel=1e-8)

    @pytest.mark.parametrize("alpha,p", [(0.5, 0.5), (1.3, 0.6), (0.1, 0.99), (1.99, 0.5)])
    def test_matches_scipy(self, alpha, p):
        # independent route: algebraic-weight quadrature for x^(-alpha p) near 0
        def h(x):
            if x <= 0:
                return math.gamma(1 + alpha) * (1 - p) ** (alpha * p)
            return f_integrand(x, alpha, p) * x ** (alpha * p)
        ref, _ = integrate.quad(h, 0, 1 - p, weight="alg", wvar=(-alpha * p, 0), limit=200, epsabs=0,
                                epsrel=1e-11)
        assert c_constant(alpha, p) == pytest.approx(ref, rel=1e-8)

    def test_domain(self):
        with pytest.raises(DomainError):
            c_constant(2, 0.5)
        with pytest.raises(DomainError):
            c_constant(2, 0.75)

    def test_critical(self):
        assert critical_constant(2, 0.5) == pytest.approx(1.0)
        assert critical_constant(1.25, 0.8) == pytest.approx(0.2 * math.gamma(2.25))
        assert critical_constant(1.25, 0.8) == pytest.approx(0.22660, abs=5e-6)
        assert critical_constant("3/2", "2/3") == pytest.approx(math.gamma(2.5) / 3)
        assert critical_constant("3/2", "2/3") == pytest.approx(0.44311, abs=5e-6)
        with pytest.raises(DomainError):
            critical_constant(2, 0.4)

    def test_regime_exact(self):
        assert regime("3/2", "2/3") == "crit"
        assert regime(3, "1/3") == "crit"
        assert regime(2, "1/4") == "sub"
        assert regime(2, "3/4") == "super"
        # 1.5 * 0.6666666666666666 is not exactly 1 but lies within tolerance
        assert regime(1.5, 2 / 3) == "crit"
        assert regime(1.5, 0.66) == "sub"

    def test_table_json(self):
        text = dumps_constants([(2, 0.25), ("2", "1/2"), (2, 0.75)], {"seed": 1})
        doc = json.loads(text)
        assert doc["schema"] == 1
        assert doc["constants"]["2,0.25"]["c"] == 2.0
        assert doc["constants"]["2,1/2"]["critical"] == 1.0
        assert doc["constants"]["2,0.75"]["regime"] == "super"
        assert constants_table([(1, 0.5)])["1,0.5"]["c_root_alpha"] == 1.0


class TestSimpson:
    def test_polynomial(self):
        assert adaptive_simpson(lambda x: x**3, 0.0, 2.0) == pytest.approx(4.0, rel=1e-12)

    def test_non_finite(self):
        with pytest.raises(FloatingPointError):
            adaptive_simpson(lambda x: 1 / x if x else math.inf, 0.0, 1.0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            QuadratureConfig(rel_tol=0)
