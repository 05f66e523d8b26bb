import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from hypercube_lsh import asymptotics as asy
from hypercube_lsh import largedev as ld
from hypercube_lsh.errors import DomainError

from oracles import half_normal_mgf, quadrant_quadrature


class TestQuadrant:
    def test_separable(self):
        assert ld.quadrant_gaussian_integral(-0.5, 0.0, -0.5) == pytest.approx(math.pi / 2,
                                                                                abs=1e-15)

    @pytest.mark.parametrize("abc", [(-1.0, 1.0, -1.0), (-1.0, -1.0, -1.0), (-0.7, 0.4, -2.0)])
    def test_against_quadrature(self, abc):
        assert abs(ld.quadrant_gaussian_integral(*abc) - quadrant_quadrature(*abc)) < 1e-8

    @pytest.mark.parametrize("abc", [(0.0, 0.0, -1.0), (-1.0, 0.0, 0.1), (-1.0, 2.0, -1.0),
                                     (-1.0, -3.0, -1.0)])
    def test_domain(self, abc):
        with pytest.raises(DomainError):
            ld.quadrant_gaussian_integral(*abc)

    @given(st.floats(-5, -0.05), st.floats(-5, 5), st.floats(-5, -0.05))
    def test_symmetry(self, a, b, c):
        assume(b * b < 4 * a * c)
        assert ld.quadrant_gaussian_integral(a, b, c) == ld.quadrant_gaussian_integral(c, b, a)


class TestLmgf:
    def test_origin(self):
        assert ld.lmgf(ld.Lambda3(0.0, 0.0, 0.0)) == 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            ld.lmgf(ld.Lambda3(0.0, 0.5, 0.0))
        with pytest.raises(DomainError):
            ld.lmgf(ld.Lambda3(1.0, 0.0, 0.0))
        assert not ld.Lambda3(1.0, 0.0, 0.0).in_domain
        assert ld.Lambda3(0.2, 0.1, -0.3).in_domain

    @pytest.mark.parametrize("lam", [(0.2, 0.1, -0.3), (-0.4, 0.0, 0.0)])
    def test_monte_carlo(self, lam):
        mean, se = half_normal_mgf(lam, 2_000_000, seed=11)
        expected = math.exp(ld.lmgf(ld.Lambda3(*lam)))
        assert abs(mean - expected) < 3 * se

    def test_matches_quadrant_integral(self):
        l1, l2, l3 = 0.3, -0.2, 0.1
        via_quad = 2 / math.pi * ld.quadrant_gaussian_integral(-(1 - 2 * l2) / 2, l1,
                                                               -(1 - 2 * l3) / 2)
        assert ld.lmgf(ld.Lambda3(l1, l2, l3)) == pytest.approx(math.log(via_quad), abs=1e-14)

    def test_convexity(self):
        rng = np.random.default_rng(5)
        checked = 0
        while checked < 100:
            a = ld.Lambda3(*rng.uniform([-2, -2, -2], [2, 0.49, 0.49]))
            b = ld.Lambda3(*rng.uniform([-2, -2, -2], [2, 0.49, 0.49]))
            if not (a.in_domain and b.in_domain):
                continue
            mid = ld.Lambda3(*(0.5 * (a.as_array() + b.as_array())))
            assert ld.lmgf(mid) <= 0.5 * (ld.lmgf(a) + ld.lmgf(b)) + 1e-12
            checked += 1


class TestNormPenalty:
    def test_values(self):
        assert ld.norm_penalty(1.0, 1.0) == 0.0
        assert ld.norm_penalty(2.0, 1.0) == pytest.approx(1.5 - math.log(2.0), abs=1e-15)

    def test_grid_nonnegative(self):
        g = np.geomspace(1e-3, 1e3, 60)
        assert all(ld.norm_penalty(x, y) >= 0.0 for x in g for y in g)

    @given(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6))
    def test_nonnegative(self, x, y):
        v = ld.norm_penalty(x, y)
        assert v >= 0.0
        assert v == pytest.approx(x * x / 2 + y * y / 2 - 1 - math.log(x * y),
                                  rel=1e-9, abs=1e-9)

    def test_domain(self):
        with pytest.raises(DomainError):
            ld.norm_penalty(0.0, 1.0)


class TestRates:
    def test_mean_point_vanishes(self):
        r = ld.rate_numeric(ld.ZPoint(2 / math.pi, 1.0, 1.0))
        assert abs(r.value) < 1e-6

    def test_numeric_minus_at_third_pi(self):
        r = ld.rate_numeric(ld.ZPoint.from_angle(asy.THIRD_PI))
        assert r.value == pytest.approx(ld.rate_minus_closed(asy.THIRD_PI).value, abs=1e-5)
        assert ld.rate_minus_closed(asy.THIRD_PI).value == pytest.approx(math.log(math.pi / 3),
                                                                         abs=1e-15)

    def test_numeric_plus_at_04(self):
        r = ld.rate_numeric(ld.ZPoint.from_angle(0.4))
        assert r.value == pytest.approx(ld.rate_plus_closed(0.4).value, abs=1e-5)
        restricted = ld.rate_numeric(ld.ZPoint.from_angle(0.4), sign="plus")
        assert restricted.value == pytest.approx(ld.rate_plus_closed(0.4).value, abs=1e-5)
        assert restricted.argmax_lambda.l1 > 0

    def test_numeric_minus_restricted_at_095(self):
        r = ld.rate_numeric(ld.ZPoint.from_angle(0.95), sign="minus")
        assert r.value == pytest.approx(ld.rate_minus_closed(0.95).value, abs=1e-5)
        assert r.argmax_lambda.l1 < 0

    def test_argmax_in_domain(self):
        r = ld.rate_numeric(ld.ZPoint.from_angle(0.7))
        assert r.argmax_lambda.in_domain
        lam = r.argmax_lambda
        z = ld.ZPoint.from_angle(0.7)
        direct = lam.l1 * z.z1 + lam.l2 * z.z2 + lam.l3 * z.z3 - ld.lmgf(lam)
        assert direct == pytest.approx(r.value, abs=1e-12)

    def test_outside_cone_is_infinite(self):
        assert ld.rate_numeric(ld.ZPoint(2.0, 1.0, 1.0)).value == math.inf

    def test_pivot_values(self):
        assert ld.rate_plus_closed(asy.PIVOT_ANGLE).value == 0.0
        assert ld.rate_minus_closed(asy.PIVOT_ANGLE).value == 0.0

    def test_half_pi_limit(self):
        v = ld.rate_minus_closed(asy.HALF_PI - 1e-12).value
        assert v == pytest.approx(math.log(math.pi / 2), abs=1e-9)
        assert math.exp(-v) / 2 == pytest.approx(1 / math.pi, abs=1e-9)

    @pytest.mark.parametrize("theta", [0.0, asy.HALF_PI, 2.0])
    def test_domain(self, theta):
        for f in (ld.rate_plus_closed, ld.rate_minus_closed, ld.collision_base_via_ld):
            with pytest.raises(DomainError):
                f(theta)

    def test_zpoint_validation(self):
        with pytest.raises(DomainError):
            ld.ZPoint(0.1, 0.0, 1.0)

    def test_rate_nonnegative_near_mean(self):
        for z1 in (0.5, 2 / math.pi, 0.7):
            assert ld.rate_numeric(ld.ZPoint(z1, 1.0, 1.0)).value >= -1e-12

    @pytest.mark.parametrize("theta", [0.15, 0.5, 0.8, 0.9, 1.0, 1.2, 1.45])
    def test_numeric_sup_soundness(self, theta):
        z = ld.ZPoint.from_angle(theta)
        plus = ld.rate_plus_closed(theta).value
        minus = ld.rate_minus_closed(theta).value
        assert abs(ld.rate_numeric(z).value - max(plus, minus)) < 1e-5
        assert abs(ld.rate_numeric(z, "plus").value - plus) < 1e-5
        assert abs(ld.rate_numeric(z, "minus").value - minus) < 1e-5


class TestPipeline:
    @pytest.mark.parametrize("theta,expected", [(asy.THIRD_PI, math.sqrt(3) / math.pi),
                                                (asy.PIVOT_ANGLE, asy.NU)])
    def test_anchors(self, theta, expected):
        assert ld.collision_base_via_ld(theta) == pytest.approx(expected, abs=1e-9)

    def test_beta0_route(self):
        v = ld.rate_plus_closed(0.2).value
        assert math.exp(-v) / (2 * math.sin(0.2)) == pytest.approx(
            asy.hypercube_collision_base(0.2).base, abs=1e-12)

    def test_grid_equivalence(self):
        for theta in np.linspace(0.05, asy.HALF_PI - 0.05, 50):
            assert abs(ld.collision_base_via_ld(theta)
                       - asy.hypercube_collision_base(theta).base) < 1e-9

    @given(st.floats(1e-4, asy.HALF_PI - 1e-4))
    def test_equivalence_property(self, theta):
        assert ld.collision_base_via_ld(theta) == pytest.approx(
            asy.hypercube_collision_base(theta).base, abs=1e-9)
