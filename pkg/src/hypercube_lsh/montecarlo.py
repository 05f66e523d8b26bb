"""Empirical collision probabilities for (partial) hypercube hashing.

Every trial draws a fresh random rotation and hashes a fixed planted pair
``x = e1``, ``y = cos(theta) e1 + sin(theta) e2``.  Only the images of
``e1`` and ``e2`` matter, which are the first two columns of the rotation;
they are sampled directly as a Gram-Schmidt frame of two Gaussian vectors,
so a trial costs ``O(d)`` instead of ``O(d^3)``.  Gaussians come from a
counter-based generator keyed by the seed and indexed by the trial number,
which makes totals independent of how trials are split across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import _backend
from . import rotations as rot
from .errors import DomainError, InsufficientDataError

MIN_FIT_SUCCESSES = 20
CSV_FIELDS = ("theta", "d", "dprime", "trials", "successes", "p_hat", "stderr")


@dataclass(frozen=True)
class CollisionEstimate:
    d: int
    dprime: int
    theta: float
    trials: int
    successes: int

    @property
    def p_hat(self) -> float:
        return self.successes / self.trials

    @property
    def stderr(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1.0 - p) / self.trials)

    def wilson(self, z: float = 1.96):
        return wilson_interval(self.successes, self.trials, z)

    def per_dimension_base(self):
        """``p_hat ** (1/dprime)`` and its delta-method standard error."""
        if self.successes == 0:
            return 0.0, math.nan
        base = self.p_hat ** (1.0 / self.dprime)
        return base, base * self.stderr / (self.dprime * self.p_hat)

    def row(self) -> tuple:
        return (self.theta, self.d, self.dprime, self.trials, self.successes,
                self.p_hat, self.stderr)


@dataclass(frozen=True)
class CurveFit:
    """Least-squares fit ``p ~ exp(c1 * dim + c2)``."""

    c1: float
    c2: float
    rms_residual: float
    points_used: int
    c1_stderr: float = math.nan

    @property
    def base(self) -> float:
        return math.exp(self.c1)


def wilson_interval(successes: int, trials: int, z: float = 1.96):
    if trials < 1:
        raise DomainError("trials must be positive")
    p = successes / trials
    den = 1.0 + z * z / trials
    mid = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


def pair_at_angle(d: int, theta: float):
    """Unit vectors ``e1`` and ``cos(theta) e1 + sin(theta) e2`` in ``R^d``."""
    if d < 2:
        raise DomainError("need d >= 2")
    x = np.zeros(d)
    y = np.zeros(d)
    x[0] = 1.0
    y[0] = math.cos(theta)
    y[1] = math.sin(theta)
    return x, y


def _split(start: int, stop: int, parts: int):
    parts = max(1, min(parts, stop - start))
    edges = np.linspace(start, stop, parts + 1).round().astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _check(d: int, dprime: int, theta: float, trials: int):
    if d < 2:
        raise DomainError("need d >= 2")
    if not 1 <= dprime <= d:
        raise DomainError("need 1 <= dprime <= d")
    if trials < 1:
        raise DomainError("trials must be positive")
    if not (math.isfinite(theta) and 0.0 <= theta <= math.pi):
        raise DomainError("theta must lie in [0, pi]")


def count_range(d: int, dprime: int, theta: float, seed: int, start: int, stop: int) -> int:
    """Collisions over trial indices ``[start, stop)``."""
    if theta == 0.0:
        return stop - start
    return int(_backend.count_collisions(d, dprime, math.cos(theta), math.sin(theta),
                                         seed, start, stop))


def estimate_collision(d: int, dprime: int, theta: float, trials: int, seed: int,
                       workers: int = 1) -> CollisionEstimate:
    """Estimate ``Pr[first dprime signs of R x and R y agree]`` over Haar ``R``.

    Parameters
    ----------
    workers : int
        Threads to split trials over.  The compiled kernel releases the
        GIL; results do not depend on this value.
    """
    _check(d, dprime, theta, trials)
    chunks = _split(0, trials, workers)
    if workers <= 1 or len(chunks) == 1:
        total = sum(count_range(d, dprime, theta, seed, a, b) for a, b in chunks)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            total = sum(pool.map(lambda ab: count_range(d, dprime, theta, seed, *ab), chunks))
    return CollisionEstimate(d, dprime, float(theta), trials, total)


def estimate_collision_dense(d: int, dprime: int, theta: float, trials: int, seed: int,
                             kind="HaarQR") -> CollisionEstimate:
    """Reference estimator that materialises a full rotation per trial.

    Slow (``O(d^3)`` per trial for Haar); used to validate the frame
    sampler.
    """
    _check(d, dprime, theta, trials)
    x, y = pair_at_angle(d, theta)
    pair = np.stack([x, y])
    seeds = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF).generate_state(
        trials, np.uint64)
    hits = 0
    for child in seeds:
        r = rot.make_rotation(kind, d, dprime, int(child))
        s = rot.sign_bits(r.apply(pair))
        hits += bool(np.array_equal(s[0], s[1]))
    return CollisionEstimate(d, dprime, float(theta), trials, hits)


def estimate_collision_pseudo(d: int, dprime: int, theta: float, trials: int, seed: int,
                              rounds: int = 3, chunk: int = 4096) -> CollisionEstimate:
    """Estimator using a fresh structured pseudo-random rotation per trial."""
    _check(d, dprime, theta, trials)
    size = rot.next_pow2(d)
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    x, y = pair_at_angle(d, theta)
    scale = 1.0 / math.sqrt(size)
    hits = 0
    for lo in range(0, trials, chunk):
        m = min(chunk, trials - lo)
        signs = rng.choice(np.array([-1.0, 1.0]), size=(rounds, m, size))
        buf = np.zeros((2 * m, size))
        buf[:m, :d] = x
        buf[m:, :d] = y
        for s in signs:
            buf *= np.concatenate([s, s])
            _backend.fwht(buf)
            buf *= scale
        bits = rot.sign_bits(buf[:, :dprime])
        hits += int(np.count_nonzero((bits[:m] == bits[m:]).all(axis=1)))
    return CollisionEstimate(d, dprime, float(theta), trials, hits)


def collision_curve(d: int, dprime: int, thetas: Iterable[float], trials: int, seed: int,
                    workers: int = 1) -> List[CollisionEstimate]:
    return [estimate_collision(d, dprime, t, trials, seed, workers) for t in thetas]


def _admissible(points):
    dims, logs, var = [], [], []
    for p in points:
        if isinstance(p, CollisionEstimate):
            if p.successes < MIN_FIT_SUCCESSES:
                continue
            dims.append(float(p.dprime))
            logs.append(math.log(p.p_hat))
            var.append((1.0 - p.p_hat) / (p.trials * p.p_hat))
            continue
        dim, phat = float(p[0]), float(p[1])
        if len(p) > 2 and p[2] is not None and p[2] < MIN_FIT_SUCCESSES:
            continue
        if not phat > 0.0:
            continue
        dims.append(dim)
        logs.append(math.log(phat))
        var.append(0.0)
    return np.array(dims), np.array(logs), np.array(var)


def fit_exponential(points: Sequence) -> CurveFit:
    """Ordinary least squares of ``ln p_hat`` on dimension.

    ``points`` holds :class:`CollisionEstimate` objects (fitted against
    ``dprime``; those with fewer than 20 successes are dropped) or tuples
    ``(dim, p_hat[, successes])``.
    """
    x, yv, var = _admissible(points)
    if x.size < 2 or np.ptp(x) == 0.0:
        raise InsufficientDataError("need at least two admissible points at distinct dims")
    a = np.column_stack([x, np.ones_like(x)])
    (c1, c2), *_ = np.linalg.lstsq(a, yv, rcond=None)
    resid = yv - (c1 * x + c2)
    w = (x - x.mean()) / np.sum((x - x.mean()) ** 2)
    return CurveFit(float(c1), float(c2), float(np.sqrt(np.mean(resid ** 2))), int(x.size),
                    float(np.sqrt(np.sum(w * w * var))))


@dataclass(frozen=True)
class AngleHistogram:
    d: int
    edges: np.ndarray
    counts: np.ndarray
    mean: float
    variance: float

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.counts.sum() * np.diff(self.edges))

    @property
    def mode(self) -> float:
        return float(self.centers[int(np.argmax(self.counts))])

    def log_density_slope(self, min_count: int = 20) -> float:
        """Regression slope of ``ln density`` on ``ln sin(theta)``."""
        keep = self.counts >= min_count
        if np.count_nonzero(keep) < 2:
            raise InsufficientDataError("too few populated bins")
        x = np.log(np.sin(self.centers[keep]))
        y = np.log(self.density[keep])
        return float(np.polyfit(x, y, 1)[0])


def sample_angles(d: int, trials: int, seed: int) -> np.ndarray:
    if d < 2:
        raise DomainError("need d >= 2")
    return _backend.sample_angles(d, seed, 0, trials)


def angle_histogram(d: int, trials: int, seed: int, bins: int = 90) -> AngleHistogram:
    """Histogram on ``[0, pi]`` of angles between independent Gaussian pairs."""
    a = sample_angles(d, trials, seed)
    counts, edges = np.histogram(a, bins=bins, range=(0.0, math.pi))
    return AngleHistogram(d, edges, counts, float(a.mean()), float(a.var()))
