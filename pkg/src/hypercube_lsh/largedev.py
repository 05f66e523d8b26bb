"""Large-deviations route to the hypercube collision base.

For a planted pair at angle ``theta`` the probability that both land in the
positive orthant is governed by the empirical mean of
``(X_i Y_i, X_i^2, Y_i^2)`` over half-normal coordinates.  This module
evaluates the log-moment-generating function of that triple in closed
form, computes its Fenchel-Legendre transform both numerically and through
the two closed branches, and assembles the collision base from them.  The
result is an independent second derivation of the values produced by
:mod:`hypercube_lsh.asymptotics`.

Numeric suprema use the substitution ``1 - 2 l2 = v r``, ``1 - 2 l3 = v/r``,
``l1 = -v cos(psi)`` with ``psi`` in ``(0, pi)``.  It maps the domain of the
LMGF one-to-one onto ``(0, pi) x (0, inf) x (0, inf)`` and turns the
arctangent term into ``ln(2 psi)``.  The ratio ``r`` is optimized in closed
form, leaving a smooth two-variable problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import asymptotics as asy
from .errors import ConvergenceError, DomainError

LN_PI = math.log(math.pi)

# Distance kept from the ends of the psi interval.
_PSI_MARGIN = 1e-9
_START_FRACTIONS = (0.125, 0.375, 0.625, 0.875)
_START_LOG_V = (-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0)
_AGREEMENT = 1e-5


class RateBranch(str, Enum):
    PLUS_CLOSED = "PlusClosed"
    MINUS_CLOSED = "MinusClosed"
    NUMERIC = "Numeric"


@dataclass(frozen=True)
class Lambda3:
    l1: float
    l2: float
    l3: float

    @property
    def discriminant(self) -> float:
        return self.l1 * self.l1 - (1.0 - 2.0 * self.l2) * (1.0 - 2.0 * self.l3)

    @property
    def in_domain(self) -> bool:
        return self.l2 < 0.5 and self.l3 < 0.5 and self.discriminant < 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.l1, self.l2, self.l3])


@dataclass(frozen=True)
class ZPoint:
    z1: float
    z2: float
    z3: float

    def __post_init__(self):
        if not (self.z2 > 0.0 and self.z3 > 0.0) or not math.isfinite(self.z1):
            raise DomainError("z2 and z3 must be positive, z1 finite")

    @classmethod
    def from_angle(cls, theta: float, x: float = 1.0, y: float = 1.0) -> "ZPoint":
        return cls(x * y * math.cos(theta), x * x, y * y)


@dataclass(frozen=True)
class RateValue:
    value: float
    argmax_lambda: Optional[Lambda3]
    branch: RateBranch


def quadrant_gaussian_integral(a: float, b: float, c: float) -> float:
    """Integral of ``exp(a x^2 + b x y + c y^2)`` over the positive quadrant."""
    disc = 4.0 * (a * c) - b * b
    if not (a < 0.0 and c < 0.0 and disc > 0.0):
        raise DomainError("need a < 0, c < 0 and b^2 < 4ac")
    root = math.sqrt(disc)
    return (math.pi + 2.0 * math.atan(b / root)) / (2.0 * root)


def lmgf(lam: Lambda3) -> float:
    """Log-MGF of ``(X Y, X^2, Y^2)`` for independent half-normal ``X, Y``."""
    if not lam.in_domain:
        raise DomainError(f"{lam} lies outside the finiteness domain")
    neg_d = -lam.discriminant
    root = math.sqrt(neg_d)
    # pi + 2 atan(l1/root), written without cancellation for l1 << 0
    return math.log(2.0 * math.atan2(root, -lam.l1)) - LN_PI - 0.5 * math.log(neg_d)


def norm_penalty(x: float, y: float) -> float:
    """Rate cost ``x^2/2 + y^2/2 - 1 - ln(x y)`` of squared norms ``x^2, y^2``."""
    if not (x > 0.0 and y > 0.0):
        raise DomainError("norms must be positive")
    return 0.5 * (x - 1.0) ** 2 + 0.5 * (y - 1.0) ** 2 + (x - 1.0 - math.log(x)) + (
        y - 1.0 - math.log(y))


# -- numeric supremum ------------------------------------------------------

def _log_sin_over_2psi(psi: float) -> float:
    return math.log(math.sin(psi) / psi) - math.log(2.0)


def _objective(p, z: ZPoint, geo: float):
    """Negated Legendre objective and its gradient in ``(psi, ln v)``."""
    psi, t = float(p[0]), float(p[1])
    v = math.exp(t)
    k = geo + z.z1 * math.cos(psi)
    val = 0.5 * (z.z2 + z.z3) - v * k + t + _log_sin_over_2psi(psi) + LN_PI
    g_psi = v * z.z1 * math.sin(psi) + math.cos(psi) / math.sin(psi) - 1.0 / psi
    g_t = 1.0 - v * k
    return -val, np.array([-g_psi, -g_t])


def _to_lambda(psi: float, t: float, z: ZPoint) -> Lambda3:
    v = math.exp(t)
    r = math.sqrt(z.z3 / z.z2)
    return Lambda3(-v * math.cos(psi), 0.5 * (1.0 - v * r), 0.5 * (1.0 - v / r))


def _projected_grad(x, g, lo, hi):
    g = g.copy()
    if x[0] <= lo + 1e-15 and g[0] > 0.0:
        g[0] = 0.0
    if x[0] >= hi - 1e-15 and g[0] < 0.0:
        g[0] = 0.0
    return float(np.max(np.abs(g)))


def rate_numeric(z: ZPoint, sign: Optional[str] = None) -> RateValue:
    """Legendre transform ``sup_l <l, z> - lmgf(l)`` by multi-start ascent.

    Parameters
    ----------
    z : ZPoint
    sign : {None, "plus", "minus"}
        Restrict the supremum to ``l1 > 0`` or ``l1 < 0``.

    Returns
    -------
    RateValue
        The best value found, a lower bound on the true supremum.  Suprema
        attained only at the boundary of the restricted region are
        approached to within about 1e-9 in ``psi``.

    Raises
    ------
    ConvergenceError
        If the two best starts disagree by more than 1e-5.
    """
    geo = math.sqrt(z.z2 * z.z3)
    if abs(z.z1) > geo:
        # outside the Cauchy-Schwarz cone: unreachable, infinite rate
        return RateValue(math.inf, None, RateBranch.NUMERIC)
    half = 0.5 * math.pi
    if sign is None:
        lo, hi = _PSI_MARGIN, math.pi - _PSI_MARGIN
    elif sign == "minus":
        lo, hi = _PSI_MARGIN, half - _PSI_MARGIN
    elif sign == "plus":
        lo, hi = half + _PSI_MARGIN, math.pi - _PSI_MARGIN
    else:
        raise ValueError("sign must be None, 'plus' or 'minus'")

    results = []
    for fp in _START_FRACTIONS:
        for t0 in _START_LOG_V:
            x0 = np.array([lo + fp * (hi - lo), t0 + math.log(1.0 / max(geo, 1e-300))])
            res = minimize(_objective, x0, args=(z, geo), jac=True, method="L-BFGS-B",
                           bounds=[(lo, hi), (-50.0, 50.0)],
                           options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 500})
            x = res.x.copy()
            # Newton-free refinement: the optimal ln v is explicit given psi
            k = geo + z.z1 * math.cos(x[0])
            if k > 0.0:
                x[1] = -math.log(k)
            f, g = _objective(x, z, geo)
            results.append((-f, _projected_grad(x, g, lo, hi), x))
    results.sort(key=lambda r: (-r[0], tuple(_to_lambda(r[2][0], r[2][1], z).as_array())))
    best, second = results[0], results[1]
    if best[0] - second[0] > _AGREEMENT:
        raise ConvergenceError(
            f"multi-start disagreement {best[0] - second[0]:.3g} exceeds {_AGREEMENT}")
    lam = _to_lambda(best[2][0], best[2][1], z)
    return RateValue(best[0], lam, RateBranch.NUMERIC)


# -- closed branches -------------------------------------------------------

def _check_open_quadrant(theta: float) -> float:
    theta = asy.check_angle(theta)
    if not 0.0 < theta < 0.5 * math.pi:
        raise DomainError("closed rate branches need 0 < theta < pi/2")
    return theta


def rate_plus_closed(theta: float) -> RateValue:
    """Transform at ``z = (cos theta, 1, 1)`` restricted to ``l1 > 0``."""
    theta = _check_open_quadrant(theta)
    c = math.cos(theta)
    if theta >= asy.PIVOT_ANGLE:
        return RateValue(0.0, None, RateBranch.PLUS_CLOSED)
    if asy.PIVOT_ANGLE - theta <= asy.PIVOT_WINDOW:
        return RateValue(math.log(0.5 * math.pi * c), None, RateBranch.PLUS_CLOSED)
    s = asy.solve_beta0(theta).excess
    sin2 = math.sin(theta) ** 2
    # ln(pi b (b c - 1) / (2 (b - c)^2)) with b c = 1 + s
    val = math.log(math.pi * c * (1.0 + s) * s / (2.0 * (sin2 + s) ** 2))
    return RateValue(val, None, RateBranch.PLUS_CLOSED)


def rate_minus_closed(theta: float) -> RateValue:
    """Transform at ``z = (cos theta, 1, 1)`` restricted to ``l1 < 0``."""
    theta = _check_open_quadrant(theta)
    c = math.cos(theta)
    if theta <= asy.PIVOT_ANGLE:
        return RateValue(0.0, None, RateBranch.MINUS_CLOSED)
    if theta - asy.PIVOT_ANGLE <= asy.PIVOT_WINDOW:
        return RateValue(math.log(0.5 * math.pi * c), None, RateBranch.MINUS_CLOSED)
    if theta >= asy.THIRD_PI - asy.THIRD_PI_WINDOW:
        return RateValue(math.log(math.pi / (2.0 * (1.0 + c))), None, RateBranch.MINUS_CLOSED)
    u = asy.solve_beta1(theta).excess
    # ln(pi b (b c + 1) / (2 (c + b)^2)) with b = 1 + u
    val = math.log(math.pi * (1.0 + u) * (c * (1.0 + u) + 1.0) / (2.0 * (c + 1.0 + u) ** 2))
    return RateValue(val, None, RateBranch.MINUS_CLOSED)


def rate_closed(theta: float) -> float:
    """Full transform at ``z = (cos theta, 1, 1)``: the larger branch."""
    return max(rate_plus_closed(theta).value, rate_minus_closed(theta).value)


def collision_base_via_ld(theta: float) -> float:
    """Hypercube collision base assembled from the rate function.

    The orthant probability decays like ``(2 sin theta)^-d exp(-d I)`` with
    ``I`` the rate at ``x = y = 1``, where the norm penalty vanishes.
    """
    theta = _check_open_quadrant(theta)
    return math.exp(-rate_closed(theta)) / (2.0 * math.sin(theta))
