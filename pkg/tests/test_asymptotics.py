import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from hypercube_lsh import asymptotics as asy
from hypercube_lsh.errors import DegenerateError, DomainError

SQRT3_OVER_PI = math.sqrt(3.0) / math.pi
NU = math.pi / (2.0 * math.sqrt(math.pi ** 2 - 4.0))

# Frozen from the mpmath bisection oracle below (40 digits, 12 kept).
BETA0_AT_04 = 1.12312251995
BASE_AT_04 = 0.862191666351
BETA1_AT_095 = 3.04939364154
BASE_AT_095 = 0.609990286142


def _mp_bisect(f, lo, hi, steps=200):
    flo = f(lo)
    for _ in range(steps):
        mid = (lo + hi) / 2
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return (lo + hi) / 2


def mp_beta0(theta):
    with mp.workdps(40):
        th = mp.mpf(theta)
        c = mp.cos(th)
        f = lambda b: mp.acos(-1 / b) - (b - c) * mp.sqrt(b * b - 1) / (b * (b * c - 1))
        return _mp_bisect(f, 1 / c + mp.mpf("1e-9"), mp.mpf(10) ** 6)


def mp_beta1(theta):
    with mp.workdps(40):
        th = mp.mpf(theta)
        c = mp.cos(th)
        f = lambda b: mp.acos(1 / b) - (b + c) * mp.sqrt(b * b - 1) / (b * (b * c + 1))
        return _mp_bisect(f, 1 + mp.mpf("1e-12"), mp.mpf(10) ** 6)


class TestRoots:
    def test_beta0_matches_mpmath_oracle(self):
        r = asy.solve_beta0(0.4)
        assert r.beta == pytest.approx(float(mp_beta0(0.4)), rel=1e-13)
        assert r.beta == pytest.approx(BETA0_AT_04, rel=1e-11)
        assert r.residual < 1e-10
        assert r.branch is asy.Branch.BETA0

    def test_beta1_matches_mpmath_oracle(self):
        r = asy.solve_beta1(0.95)
        assert r.beta == pytest.approx(float(mp_beta1(0.95)), rel=1e-13)
        assert r.beta == pytest.approx(BETA1_AT_095, rel=1e-11)
        assert r.branch is asy.Branch.BETA1

    def test_pinned_bases(self):
        assert asy.hypercube_collision_base(0.4).base == pytest.approx(BASE_AT_04, rel=1e-11)
        assert asy.hypercube_collision_base(0.95).base == pytest.approx(BASE_AT_095, rel=1e-11)

    def test_beta0_small_angle(self):
        r = asy.solve_beta0(1e-3)
        assert 1.0 < r.beta < 1.0 + 1e-2
        assert r.beta * math.cos(1e-3) > 1.0

    def test_beta0_blows_up_near_pivot(self):
        near = asy.solve_beta0(asy.PIVOT_ANGLE - 1e-4).beta
        nearer = asy.solve_beta0(asy.PIVOT_ANGLE - 1e-5).beta
        assert near > 1e2 and nearer > near

    def test_beta1_blows_up_near_pivot(self):
        assert asy.solve_beta1(asy.PIVOT_ANGLE + 1e-4).beta > 1e2

    def test_beta1_tends_to_one_at_third_pi(self):
        r = asy.solve_beta1(asy.THIRD_PI - 1e-3)
        assert 1.0 < r.beta < 1.1
        assert r.beta == pytest.approx(float(mp_beta1(asy.THIRD_PI - 1e-3)), rel=1e-10)

    def test_small_angle_series_joins_root_branch(self):
        below = asy.hypercube_collision_base(asy.SMALL_ANGLE * (1 - 1e-9)).base
        above = asy.hypercube_collision_base(asy.SMALL_ANGLE * (1 + 1e-9)).base
        assert abs(below - above) < 1e-14
        assert asy.hypercube_collision_base(1e-80).base == 1.0

    def test_beta1_branch_at_one_is_closed_form(self):
        # Beta1 base formula at beta = 1 collapses to (1 + cos)/(pi sin)
        th = 1.0
        c, s = math.cos(th), math.sin(th)
        assert (1 + c) ** 2 / (math.pi * (c + 1) * s) == pytest.approx((1 + c) / (math.pi * s))

    @pytest.mark.parametrize("theta", [0.0, asy.PIVOT_ANGLE, 1.2, -0.1])
    def test_beta0_domain(self, theta):
        with pytest.raises(DomainError):
            asy.solve_beta0(theta)

    @pytest.mark.parametrize("theta", [0.5, asy.PIVOT_ANGLE, asy.THIRD_PI])
    def test_beta1_domain(self, theta):
        with pytest.raises(DomainError):
            asy.solve_beta1(theta)

    @given(st.floats(1e-3, asy.PIVOT_ANGLE - 1e-6))
    def test_beta0_residual_property(self, theta):
        r = asy.solve_beta0(theta)
        assert r.residual < 1e-10
        assert r.beta * math.cos(theta) > 1.0

    @given(st.floats(asy.PIVOT_ANGLE + 1e-6, asy.THIRD_PI - 1e-6))
    def test_beta1_residual_property(self, theta):
        r = asy.solve_beta1(theta)
        assert r.residual < 1e-10
        assert r.beta > 1.0


class TestCollisionBase:
    def test_anchors(self):
        assert asy.hypercube_collision_base(asy.THIRD_PI).base == pytest.approx(
            SQRT3_OVER_PI, abs=1e-12)
        assert asy.hypercube_collision_base(asy.PIVOT_ANGLE).base == pytest.approx(NU, abs=1e-12)
        assert asy.NU == pytest.approx(NU, abs=1e-15)
        assert asy.hypercube_collision_base(0.0).base == 1.0

    def test_half_pi_literal_and_limit(self):
        r = asy.hypercube_collision_base(asy.HALF_PI)
        assert r.base == 0.0 and r.branch is asy.Branch.ZERO
        assert asy.hypercube_collision_base(asy.HALF_PI - 1e-9).base == pytest.approx(
            1 / math.pi, abs=1e-8)
        assert asy.collision_base(asy.HALF_PI, "Hypercube") == 1 / math.pi
        assert asy.collision_base(asy.HALF_PI, "Hypercube", left_limit=False) == 0.0

    @pytest.mark.parametrize("theta,branch", [(0.3, "Beta0"), (0.95, "Beta1"), (1.2, "ClosedForm"),
                                              (2.5, "Zero"), (math.pi, "Zero")])
    def test_branch_labels(self, theta, branch):
        r = asy.hypercube_collision_base(theta)
        assert r.branch.value == branch
        assert (r.beta is not None) == (branch in ("Beta0", "Beta1"))

    def test_continuity_at_pivot(self):
        left = asy.hypercube_collision_base(asy.PIVOT_ANGLE - 1e-6)
        right = asy.hypercube_collision_base(asy.PIVOT_ANGLE + 1e-6)
        assert left.branch is asy.Branch.BETA0 and right.branch is asy.Branch.BETA1
        assert abs(left.base - NU) < 1e-4 and abs(right.base - NU) < 1e-4

    def test_continuity_at_third_pi(self):
        r = asy.hypercube_collision_base(asy.THIRD_PI - 1e-8)
        assert r.branch is asy.Branch.BETA1
        assert abs(r.base - SQRT3_OVER_PI) < 1e-6

    def test_strictly_decreasing(self):
        grid = np.linspace(0.0, asy.HALF_PI, 1002)[1:-1]
        vals = np.array([asy.hypercube_collision_base(t).base for t in grid])
        assert np.all(np.diff(vals) < 0)

    def test_dominated_by_hyperplane(self):
        for t in np.linspace(0.01, asy.HALF_PI, 500, endpoint=False):
            assert asy.hypercube_collision_base(t).base < asy.hyperplane_collision(t)

    @given(st.floats(0.0, math.pi))
    def test_base_in_unit_interval(self, theta):
        b = asy.hypercube_collision_base(theta).base
        assert 0.0 <= b <= 1.0

    @pytest.mark.parametrize("bad", [-1e-9, math.pi + 1e-9, math.nan, math.inf])
    def test_angle_domain(self, bad):
        with pytest.raises(DomainError):
            asy.hypercube_collision_base(bad)


class TestSimpleLaws:
    def test_hyperplane(self):
        assert asy.hyperplane_collision(0.0, 7) == 1.0
        assert asy.hyperplane_collision(asy.THIRD_PI) == pytest.approx(2 / 3)
        assert asy.hyperplane_collision(asy.HALF_PI) == pytest.approx(0.5)
        with pytest.raises(DomainError):
            asy.hyperplane_collision(0.3, 0)

    def test_square(self):
        assert asy.square_collision(0.0) == 1.0
        assert asy.square_collision(math.pi / 4) == pytest.approx(0.5)
        assert asy.square_collision(3 * math.pi / 5) == 0.0


class TestRho:
    def test_hyperplane_anchor(self):
        assert asy.rho(asy.THIRD_PI, asy.HALF_PI, "Hyperplane").rho == pytest.approx(
            math.log2(1.5), abs=1e-12)

    def test_hypercube_anchor(self):
        expected = 1 - 0.5 * math.log(3) / math.log(math.pi)
        assert asy.rho(asy.THIRD_PI, asy.HALF_PI, "Hypercube").rho == pytest.approx(
            expected, abs=1e-12)
        assert expected == pytest.approx(0.520, abs=1e-3)

    @pytest.mark.parametrize("model", ["Hyperplane", "Hypercube", "Square"])
    def test_equal_angles(self, model):
        assert asy.rho(0.5, 0.5, model).rho == pytest.approx(1.0)

    def test_literal_zero_flag(self):
        assert asy.rho(asy.THIRD_PI, asy.HALF_PI, "Hypercube", literal_zero=True).rho == 0.0

    def test_degenerate(self):
        with pytest.raises(DegenerateError):
            asy.rho(0.3, 2.0, "Hypercube")
        with pytest.raises(DomainError):
            asy.rho(0.6, 0.5, "Hypercube")

    def test_chord_angle_anchor(self):
        assert asy.chord_angle(math.sqrt(2.0)) == pytest.approx(asy.THIRD_PI, abs=1e-15)

    def test_random_setting_same_path(self):
        a = asy.rho_random(math.sqrt(2.0), "Hyperplane").rho
        b = asy.rho(asy.chord_angle(math.sqrt(2.0)), asy.HALF_PI, "Hyperplane").rho
        assert a == b
        assert a == pytest.approx(asy.rho(asy.THIRD_PI, asy.HALF_PI, "Hyperplane").rho,
                                  abs=1e-14)

    @given(st.floats(1.01, 50.0))
    def test_profile_invariants(self, c):
        for model in ("Hyperplane", "Hypercube"):
            p = asy.rho_random(c, model)
            assert p.theta1 < p.theta2
            assert p.p1_base >= p.p2_base
            assert 0.0 <= p.rho <= 1.0

    @given(st.floats(1.1, 1e3))
    def test_hypercube_exponent_smaller(self, c):
        assert asy.rho_random(c, "Hypercube").rho < asy.rho_random(c, "Hyperplane").rho

    def test_exponent_crossover_near_one(self):
        # very close to c = 1 (theta1 near pi/2) hyperplane hashing wins
        assert asy.rho_random(1.06, "Hypercube").rho > asy.rho_random(1.06, "Hyperplane").rho
        assert asy.rho_random(1.11, "Hypercube").rho < asy.rho_random(1.11, "Hyperplane").rho


class TestExpansions:
    def test_small_angle(self):
        eps = 1e-4
        approx = asy.small_angle_base(eps)
        assert approx == pytest.approx(1 - math.sqrt(2) / math.pi * 1e-2, abs=1e-15)
        exact = asy.hypercube_collision_base(math.acos(1 - eps)).base
        assert abs(exact - approx) < 5 * eps

    def test_small_angle_error_is_linear(self):
        # pinned constant: |exact - approx| <= C eps on eps <= 1e-3
        c_pinned = 0.6
        for eps in np.geomspace(1e-8, 1e-3, 12):
            exact = asy.hypercube_collision_base(math.acos(1 - eps)).base
            assert abs(exact - asy.small_angle_base(eps)) <= c_pinned * eps

    def test_small_angle_matches_hyperplane_to_first_order(self):
        eps = 1e-6
        theta = math.acos(1 - eps)
        hp = asy.hyperplane_collision(theta)
        assert abs(hp - asy.small_angle_base(eps)) < 10 * eps

    def test_large_c(self):
        assert asy.large_c_rho(1000) == pytest.approx(3.933e-4, abs=1e-7)
        assert abs(asy.rho_random(100, "Hypercube").rho - asy.large_c_rho(100)) < 1e-4
        hyperplane_leading = 1 / (100 * math.pi * math.log(2) / math.sqrt(2))
        assert hyperplane_leading / asy.large_c_rho(100) == pytest.approx(math.log2(math.pi))
        with pytest.raises(DomainError):
            asy.large_c_rho(1.5)

    def test_density_exponent(self):
        assert asy.log_sin_density_exponent(asy.HALF_PI) == 0.0
        assert asy.log_sin_density_exponent(math.pi / 6) == pytest.approx(math.log(0.5))
        for bad in (0.0, math.pi):
            with pytest.raises(DomainError):
                asy.log_sin_density_exponent(bad)
