import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from legpcg.legendre import (
    GaussRule,
    dphi_to_legendre,
    eval_legendre,
    eval_legendre_all,
    gauss_rule,
    legendre_table,
    normalization_constants,
    phi_to_legendre,
    product_linearization,
)


class TestEvalLegendre:
    def test_endpoint_value(self):
        assert eval_legendre(5, 1.0) == 1.0

    def test_quadratic(self):
        # L_2 = (3x^2 - 1)/2
        assert eval_legendre(2, 0.5) == pytest.approx(-0.125, abs=1e-15)

    def test_cubic(self):
        # L_3 = (5x^3 - 3x)/2
        assert eval_legendre(3, 0.5) == pytest.approx(-0.4375, abs=1e-15)

    def test_negative_degree_rejected(self):
        with pytest.raises(ValueError):
            eval_legendre(-1, 0.0)

    @given(st.integers(0, 60), st.floats(-1, 1))
    def test_parity_symmetry(self, n, x):
        left = eval_legendre(n, -x)
        right = (-1) ** n * eval_legendre(n, x)
        assert left == pytest.approx(right, abs=1e-13)

    @given(st.integers(0, 80), st.floats(-1, 1))
    def test_bounded_on_interval(self, n, x):
        assert abs(eval_legendre(n, x)) <= 1.0 + 1e-12


class TestEvalLegendreAll:
    def test_small_batch_at_minus_one(self):
        np.testing.assert_allclose(eval_legendre_all(2, -1.0), [1, -1, 1])

    def test_degree_one(self):
        np.testing.assert_allclose(eval_legendre_all(1, 0.3), [1, 0.3])

    def test_matches_per_degree_calls(self):
        batch = eval_legendre_all(4, 0.2)
        singles = [eval_legendre(k, 0.2) for k in range(5)]
        np.testing.assert_array_equal(batch, singles)

    def test_table_matches_batch(self):
        x = np.linspace(-1, 1, 7)
        tab = legendre_table(x, 6)
        for j, xj in enumerate(x):
            np.testing.assert_array_equal(tab[j], eval_legendre_all(6, xj))


class TestGaussRule:
    def test_order_two(self):
        rule = gauss_rule(2)
        np.testing.assert_allclose(rule.nodes,
                                   [-1 / np.sqrt(3), 1 / np.sqrt(3)],
                                   atol=1e-15)
        np.testing.assert_allclose(rule.weights, [1.0, 1.0], atol=1e-15)

    def test_order_three(self):
        rule = gauss_rule(3)
        np.testing.assert_allclose(rule.nodes,
                                   [-np.sqrt(0.6), 0.0, np.sqrt(0.6)],
                                   atol=1e-15)
        np.testing.assert_allclose(rule.weights, [5 / 9, 8 / 9, 5 / 9],
                                   atol=1e-15)

    def test_high_even_moment(self):
        rule = gauss_rule(64)
        moment = np.sum(rule.weights * rule.nodes ** 126)
        assert moment == pytest.approx(2 / 127, abs=1e-12)

    @pytest.mark.parametrize("order", [1, 2, 5, 17, 64, 257])
    def test_rule_invariants(self, order):
        rule = gauss_rule(order)
        assert isinstance(rule, GaussRule)
        # nodes are the roots of the degree-`order` polynomial
        assert np.max(np.abs(eval_legendre(order, rule.nodes))) <= 1e-13 * max(order, 10)
        assert np.all(np.diff(rule.nodes) > 0)
        assert np.all(rule.weights > 0)
        assert np.sum(rule.weights) == pytest.approx(2.0, abs=1e-13)
        np.testing.assert_allclose(rule.nodes, -rule.nodes[::-1], atol=1e-13)
        np.testing.assert_allclose(rule.weights, rule.weights[::-1],
                                   atol=1e-13)

    def test_discrete_orthogonality(self):
        p = 20
        rule = gauss_rule(p)
        tab = legendre_table(rule.nodes, p - 1)
        gram = np.einsum("k,km,kn->mn", rule.weights, tab, tab)
        expected = np.diag(2.0 / (2 * np.arange(p) + 1))
        np.testing.assert_allclose(gram, expected, atol=1e-12)

    def test_bad_order_rejected(self):
        with pytest.raises(ValueError):
            gauss_rule(0)


class TestProductLinearization:
    def test_x_squared(self):
        # x^2 = (1/3) L_0 + (2/3) L_2
        exp = product_linearization(1, 1)
        np.testing.assert_allclose(exp.coeffs, [2 / 3, 1 / 3], atol=1e-15)

    def test_constant_factor(self):
        exp = product_linearization(0, 7)
        np.testing.assert_allclose(exp.coeffs, [1.0])

    def test_pointwise_product(self):
        exp = product_linearization(3, 4)
        rng = np.random.default_rng(7)
        x = rng.uniform(-1, 1, 20)
        recon = sum(c * eval_legendre(3 + 4 - 2 * s, x)
                    for s, c in enumerate(exp.coeffs))
        np.testing.assert_allclose(recon,
                                   eval_legendre(3, x) * eval_legendre(4, x),
                                   atol=1e-13)

    @given(st.integers(0, 50), st.integers(0, 50))
    @settings(max_examples=60, deadline=None)
    def test_positive_and_normalized(self, m, n):
        exp = product_linearization(m, n)
        assert exp.coeffs.size == min(m, n) + 1
        assert np.all(exp.coeffs > 0)
        # L_m(1) L_n(1) = 1, so the coefficients sum to 1
        assert np.sum(exp.coeffs) == pytest.approx(1.0, abs=1e-13)

    def test_normalization_constants_recurrence(self):
        c = normalization_constants(6)
        assert c[0] == 1.0
        # C_r = 1*3*...*(2r-1) / (r! 2^r) checked directly for small r
        import math
        for r in range(1, 7):
            direct = (math.prod(range(1, 2 * r, 2))
                      / (math.factorial(r) * 2 ** r))
            assert c[r] == pytest.approx(direct, rel=1e-15)


class TestBasisConversion:
    def test_phi0(self):
        np.testing.assert_array_equal(phi_to_legendre([1.0]), [1, 0, -1])

    def test_phi1(self):
        np.testing.assert_array_equal(phi_to_legendre([0.0, 1.0]),
                                      [0, 1, 0, -1])

    def test_linear_combination(self):
        np.testing.assert_array_equal(phi_to_legendre([2.0, 3.0, 5.0]),
                                      [2, 3, 3, -3, -5])

    def test_dphi0(self):
        np.testing.assert_array_equal(dphi_to_legendre([1.0]), [0, -3, 0])

    def test_dphi1(self):
        np.testing.assert_array_equal(dphi_to_legendre([0.0, 1.0]),
                                      [0, 0, -5, 0])

    def test_derivative_against_finite_difference(self):
        u = np.array([1.0, 1.0, 1.0])
        dcoef = dphi_to_legendre(u)
        x = 0.37
        deriv = sum(c * eval_legendre(n, x) for n, c in enumerate(dcoef))

        def phi_sum(t):
            return sum(eval_legendre(k, t) - eval_legendre(k + 2, t)
                       for k in range(3))

        h = 1e-6
        fd = (phi_sum(x + h) - phi_sum(x - h)) / (2 * h)
        assert deriv == pytest.approx(fd, abs=1e-7)

    @given(st.integers(-9, 9), st.integers(-9, 9))
    @settings(max_examples=25, deadline=None)
    def test_conversions_linear(self, a, b):
        rng = np.random.default_rng(11)
        u = rng.integers(-5, 5, 6).astype(float)
        v = rng.integers(-5, 5, 6).astype(float)
        for conv in (phi_to_legendre, dphi_to_legendre):
            np.testing.assert_array_equal(conv(a * u + b * v),
                                          a * conv(u) + b * conv(v))

    def test_phi_expansion_consistent_pointwise(self):
        rng = np.random.default_rng(5)
        u = rng.standard_normal(8)
        x = rng.uniform(-1, 1, 10)
        lcoef = phi_to_legendre(u)
        via_legendre = sum(c * eval_legendre(n, x)
                           for n, c in enumerate(lcoef))
        direct = sum(u[k] * (eval_legendre(k, x) - eval_legendre(k + 2, x))
                     for k in range(8))
        np.testing.assert_allclose(via_legendre, direct, atol=1e-13)

    def test_boundary_values_vanish(self):
        # every phi expansion vanishes at the endpoints
        lcoef = phi_to_legendre(np.array([0.3, -1.2, 2.5, 0.7]))
        for x in (-1.0, 1.0):
            val = sum(c * eval_legendre(n, x) for n, c in enumerate(lcoef))
            assert val == pytest.approx(0.0, abs=1e-13)
