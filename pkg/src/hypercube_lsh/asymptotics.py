"""Collision probabilities and LSH exponents for angular hash families.

Hyperplane hashing has exact collision probability ``1 - theta/pi`` per
hyperplane.  For the full hypercube family only the per-dimension base
``p(theta)**(1/d)`` as ``d -> inf`` is known; it is piecewise in ``theta``
with two branches defined through auxiliary roots ``beta0``/``beta1`` of a
transcendental equation, a closed-form branch on ``[pi/3, pi/2)`` and zero
beyond ``pi/2``.

Root finding works in the *excess* variable rather than in ``beta``
itself: ``s = beta*cos(theta) - 1`` for ``beta0`` and ``u = beta - 1`` for
``beta1``.  Both branch formulas and the defining equations can be written
without cancellation in these variables, which keeps the residual of the
root below 1e-10 even for ``theta`` of order 1e-8, where ``beta0`` is within
1e-24 of ``1/cos(theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from .errors import ConvergenceError, DegenerateError, DomainError

PI = math.pi
HALF_PI = 0.5 * math.pi
THIRD_PI = math.pi / 3.0

#: Angle at which normalised half-normal vectors concentrate; boundary
#: between the ``beta0`` and ``beta1`` branches.
PIVOT_ANGLE = math.acos(2.0 / math.pi)

#: Collision base at ``PIVOT_ANGLE``.
NU = math.pi / (2.0 * math.sqrt(math.pi ** 2 - 4.0))

BETA_CAP = 1e12

# Inside this distance of the pivot (resp. pi/3) the branch value is taken
# from its analytic limit; the roots run off to infinity (resp. to 1) there.
PIVOT_WINDOW = 1e-9
THIRD_PI_WINDOW = 1e-12
# below this angle the root excess (~theta^3/pi) underflows long before the
# two-term series 1 - theta/pi - theta^2/(2 pi^2) loses accuracy
SMALL_ANGLE = 1e-5


class Branch(str, Enum):
    BETA0 = "Beta0"
    BETA1 = "Beta1"
    CLOSED_FORM = "ClosedForm"
    ZERO = "Zero"


class Model(str, Enum):
    HYPERPLANE = "Hyperplane"
    HYPERCUBE = "Hypercube"
    SQUARE = "Square"

    @classmethod
    def parse(cls, value) -> "Model":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for m in cls:
            if m.value.lower() == key:
                return m
        raise ValueError(f"unknown model {value!r}")


@dataclass(frozen=True)
class BetaRoot:
    """Root of one of the two defining equations.

    ``excess`` is ``beta*cos(theta) - 1`` on the ``Beta0`` branch and
    ``beta - 1`` on the ``Beta1`` branch; ``residual`` is the absolute defect
    of the defining equation evaluated through ``excess``.
    """

    theta: float
    beta: float
    residual: float
    branch: Branch
    excess: float


@dataclass(frozen=True)
class CollisionAsymptote:
    theta: float
    base: float
    branch: Branch
    beta: Optional[BetaRoot] = None


@dataclass(frozen=True)
class SensitivityProfile:
    theta1: float
    theta2: float
    p1_base: float
    p2_base: float
    rho: float


def check_angle(theta: float) -> float:
    theta = float(theta)
    if not math.isfinite(theta) or theta < 0.0 or theta > PI:
        raise DomainError(f"angle must lie in [0, pi], got {theta!r}")
    return theta


# -- defining equations ----------------------------------------------------

def _beta0_terms(theta: float, s: float):
    c = math.cos(theta)
    sin2 = math.sin(theta) ** 2
    w = math.sqrt(sin2 + s * (2.0 + s)) / c  # sqrt(beta^2 - 1)
    lhs = PI - math.atan(w)  # arccos(-1/beta)
    rhs_over_w = (sin2 + s) / ((1.0 + s) * s)
    return w, lhs, rhs_over_w


def _beta0_scaled(theta: float, s: float) -> float:
    # defect / sqrt(beta^2 - 1); negative below the root, positive above
    w, lhs, rhs_over_w = _beta0_terms(theta, s)
    return lhs / w - rhs_over_w


def _atan_ratio_gap(w: float) -> float:
    """(1 - atan(w)/w) / w**2 without cancellation for small ``w``."""
    if w < 1e-2:
        w2 = w * w
        return 1.0 / 3.0 - w2 / 5.0 + w2 * w2 / 7.0 - w2 * w2 * w2 / 9.0
    return (1.0 - math.atan(w) / w) / (w * w)


def _beta1_scaled(theta: float, u: float) -> float:
    # defect / (beta^2 - 1)^(3/2); positive below the root, negative above
    c = math.cos(theta)
    w = math.sqrt(u * (2.0 + u))
    return c / ((1.0 + u) * (1.0 + c + c * u)) - _atan_ratio_gap(w)


def equation_defect(theta: float, excess: float, branch: Branch) -> float:
    """Absolute defect of the defining equation at the given excess.

    ``Beta0``: ``arccos(-1/b) - (b - cos t) sqrt(b^2-1) / (b (b cos t - 1))``
    with ``b = (1 + excess)/cos t``.  ``Beta1``:
    ``arccos(1/b) - (b + cos t) sqrt(b^2-1) / (b (b cos t + 1))`` with
    ``b = 1 + excess``.
    """
    branch = Branch(branch)
    if branch is Branch.BETA0:
        w, lhs, rhs_over_w = _beta0_terms(theta, excess)
        return abs(lhs - w * rhs_over_w)
    if branch is Branch.BETA1:
        w = math.sqrt(excess * (2.0 + excess))
        return abs(w ** 3 * _beta1_scaled(theta, excess))
    raise ValueError("defect only defined for Beta0/Beta1")


def _bisect_excess(g: Callable[[float], float], to_beta: Callable[[float], float]) -> float:
    """Sign change of ``g`` on ``(0, inf)``, ``g`` negative near 0.

    Geometric bracket expansion from 1, then bisection on the logarithm of
    the excess down to adjacent doubles.
    """
    lo = hi = 1.0
    while g(lo) >= 0.0:
        lo /= 16.0
        if lo < 1e-300:
            raise ConvergenceError("lower bracket collapsed to zero")
    while g(hi) <= 0.0:
        hi *= 16.0
        if to_beta(hi) > BETA_CAP:
            raise ConvergenceError(f"root bracket exceeded beta = {BETA_CAP:g}")
    while True:
        mid = math.sqrt(lo * hi) if hi > 2.0 * lo else 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return lo if abs(g(lo)) <= abs(g(hi)) else hi


def solve_beta0(theta: float) -> BetaRoot:
    """Root ``beta0 > 1/cos(theta)`` for ``0 < theta < arccos(2/pi)``."""
    theta = check_angle(theta)
    if not 0.0 < theta < PIVOT_ANGLE:
        raise DomainError("beta0 is defined for 0 < theta < arccos(2/pi)")
    c = math.cos(theta)
    s = _bisect_excess(lambda e: _beta0_scaled(theta, e), lambda e: (1.0 + e) / c)
    return BetaRoot(theta, (1.0 + s) / c, equation_defect(theta, s, Branch.BETA0),
                    Branch.BETA0, s)


def solve_beta1(theta: float) -> BetaRoot:
    """Root ``beta1 > 1`` for ``arccos(2/pi) < theta < pi/3``."""
    theta = check_angle(theta)
    if not PIVOT_ANGLE < theta < THIRD_PI:
        raise DomainError("beta1 is defined for arccos(2/pi) < theta < pi/3")
    u = _bisect_excess(lambda e: -_beta1_scaled(theta, e), lambda e: 1.0 + e)
    return BetaRoot(theta, 1.0 + u, equation_defect(theta, u, Branch.BETA1),
                    Branch.BETA1, u)


def beta0_base(theta: float, root: BetaRoot) -> float:
    s = root.excess
    c = math.cos(theta)
    sn = math.sin(theta)
    return (sn * sn + s) ** 2 / (PI * c * (1.0 + s) * s * sn)


def beta1_base(theta: float, root: BetaRoot) -> float:
    u = root.excess
    c = math.cos(theta)
    return (1.0 + u + c) ** 2 / (PI * (1.0 + u) * (c * (1.0 + u) + 1.0) * math.sin(theta))


def hypercube_collision_base(theta: float) -> CollisionAsymptote:
    """Limit of ``p(theta)**(1/d)`` for full hypercube hashing."""
    theta = check_angle(theta)
    if theta == 0.0:
        return CollisionAsymptote(theta, 1.0, Branch.CLOSED_FORM)
    if theta < SMALL_ANGLE:
        return CollisionAsymptote(theta, 1.0 - theta / PI - 0.5 * (theta / PI) ** 2,
                                  Branch.CLOSED_FORM)
    if theta >= HALF_PI:
        return CollisionAsymptote(theta, 0.0, Branch.ZERO)
    c = math.cos(theta)
    sn = math.sin(theta)
    if abs(theta - PIVOT_ANGLE) <= PIVOT_WINDOW:
        # beta -> inf on both sides
        return CollisionAsymptote(theta, 1.0 / (PI * c * sn), Branch.CLOSED_FORM)
    if theta < PIVOT_ANGLE:
        root = solve_beta0(theta)
        return CollisionAsymptote(theta, beta0_base(theta, root), Branch.BETA0, root)
    if theta < THIRD_PI - THIRD_PI_WINDOW:
        root = solve_beta1(theta)
        return CollisionAsymptote(theta, beta1_base(theta, root), Branch.BETA1, root)
    return CollisionAsymptote(theta, (1.0 + c) / (PI * sn), Branch.CLOSED_FORM)


def hyperplane_collision(theta: float, k: int = 1) -> float:
    """Exact collision probability of ``k`` independent random hyperplanes."""
    theta = check_angle(theta)
    if k < 1:
        raise DomainError("k must be a positive integer")
    return (1.0 - theta / PI) ** k


def square_collision(theta: float) -> float:
    """Exact collision probability of hypercube hashing in two dimensions."""
    theta = check_angle(theta)
    return 1.0 - 2.0 * theta / PI if theta <= HALF_PI else 0.0


def collision_base(theta: float, model, left_limit: bool = True) -> float:
    """Per-hash (hyperplane, square) or per-dimension (hypercube) base.

    With ``left_limit`` the hypercube base at exactly ``pi/2`` is the limit
    ``1/pi`` of the closed-form branch instead of the literal 0.
    """
    model = Model.parse(model)
    theta = check_angle(theta)
    if model is Model.HYPERPLANE:
        return 1.0 - theta / PI
    if model is Model.SQUARE:
        return square_collision(theta)
    if left_limit and abs(theta - HALF_PI) <= 4e-16:
        return 1.0 / PI
    return hypercube_collision_base(theta).base


def rho(theta1: float, theta2: float, model=Model.HYPERCUBE,
        literal_zero: bool = False) -> SensitivityProfile:
    """Exponent ``ln p1 / ln p2`` of an angular family."""
    theta1 = check_angle(theta1)
    theta2 = check_angle(theta2)
    if not 0.0 < theta1 <= theta2:
        raise DomainError("need 0 < theta1 <= theta2")
    p1 = collision_base(theta1, model, left_limit=not literal_zero)
    p2 = collision_base(theta2, model, left_limit=not literal_zero)
    if p2 == 0.0 and literal_zero and p1 > 0.0:
        return SensitivityProfile(theta1, theta2, p1, p2, 0.0)
    if p2 in (0.0, 1.0) or p1 == 0.0:
        raise DegenerateError(f"degenerate bases p1={p1}, p2={p2}")
    return SensitivityProfile(theta1, theta2, p1, p2, math.log(p1) / math.log(p2))


def chord_angle(c: float) -> float:
    """Angle of near neighbours in the random setting ``c*r = sqrt(2)``.

    Unit vectors at distance ``r = sqrt(2)/c`` meet at angle
    ``arccos(1 - 1/c**2)``.
    """
    if not c > 1.0:
        raise DomainError("approximation factor must exceed 1")
    return math.acos(1.0 - 1.0 / (c * c))


def rho_random(c: float, model=Model.HYPERCUBE, literal_zero: bool = False) -> SensitivityProfile:
    """Exponent in the random setting, ``theta2 = pi/2``."""
    return rho(chord_angle(c), HALF_PI, model, literal_zero)


def small_angle_base(epsilon: float) -> float:
    """First-order hypercube base for ``cos(theta) = 1 - epsilon``."""
    if not 0.0 < epsilon < 1.0:
        raise DomainError("epsilon must lie in (0, 1)")
    return 1.0 - math.sqrt(2.0) / PI * math.sqrt(epsilon)


def large_c_rho(c: float) -> float:
    """Leading term ``sqrt(2) / (pi c ln pi)`` of the hypercube exponent."""
    if c < 2.0:
        raise DomainError("large-c expansion needs c >= 2")
    return math.sqrt(2.0) / (PI * c * math.log(PI))


def log_sin_density_exponent(theta: float) -> float:
    """Exponential rate ``ln sin(theta)`` of the random-angle density."""
    theta = check_angle(theta)
    if not 0.0 < theta < PI:
        raise DomainError("density exponent undefined at 0 and pi")
    return math.log(math.sin(theta))
