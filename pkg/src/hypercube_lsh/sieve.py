"""Lattice sieving with LSH-accelerated reductions.

Contents:

* :func:`sieve_exponents`: time exponent of sieving with an angular LSH
  family, where ``(4/3)^(d/2)`` list vectors are searched for partners
  within ``pi/3``.
* :func:`nv_sieve`: a desk-scale sieve that reduces sampled lattice
  vectors against a pairwise-reduced list.  Candidate partners come from
  the whole list or from LSH buckets.
* :func:`lll_reduce` and :func:`enumeration_oracle` for exact shortest
  norms in small dimension.

Lattice vectors are int64 rows ``[vector | coefficients]``; coefficients
refer to the input basis, so membership can always be re-verified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import _backend
from . import asymptotics as asy
from .errors import BoxTooSmallError, ConvergenceError, DomainError

LOG2_FOUR_THIRDS = math.log2(4.0 / 3.0)
MAX_ENTRY = 1 << 30
MAX_SIEVE_DIM = 48
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# -- exponents -------------------------------------------------------------

@dataclass(frozen=True)
class SieveExponents:
    """Time exponent ``c_n + c_t`` of LSH-accelerated sieving.

    ``dprime_ratio`` is the number of hash coordinates per lattice
    dimension: ``c_t / log2(1/p(pi/3))`` with ``p`` the per-coordinate
    collision base of the model.
    """

    model: asy.Model
    c_n: float
    c_t: float
    theta2_opt: float
    time_exponent: float
    dprime_ratio: float
    residual: float


def _golden_max(f, lo: float, hi: float, tol: float = 1e-12):
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
    x = 0.5 * (a + b)
    return x, f(x)


def sieve_exponents(model=asy.Model.HYPERCUBE, max_iter: int = 200) -> SieveExponents:
    """Balance list size against table count for a sieve using ``model``.

    With ``t = 2^(c_t d)`` tables, each query must find a neighbour among
    ``2^(c_n d)`` list vectors.  The optimal ``c_t`` solves
    ``-c_n = max_{theta2} log2 sin(theta2) - c_t / rho(pi/3, theta2)``,
    located by bisection on ``c_t`` around a golden-section search in
    ``theta2 in (0, pi/2)``.
    """
    model = asy.Model.parse(model)
    if model not in (asy.Model.HYPERCUBE, asy.Model.HYPERPLANE):
        raise DomainError("sieve exponents are defined for Hyperplane and Hypercube")
    c_n = 0.5 * LOG2_FOUR_THIRDS
    ln_p1 = math.log(asy.collision_base(asy.THIRD_PI, model))

    def inner(ct: float, theta2: float) -> float:
        ln_p2 = math.log(asy.collision_base(theta2, model))
        return math.log2(math.sin(theta2)) - ct * ln_p2 / ln_p1

    lo_t, hi_t = 1e-9, asy.HALF_PI - 1e-12

    def peak(ct: float):
        return _golden_max(lambda th: inner(ct, th), lo_t, hi_t)

    lo, hi = 0.0, 1.0
    if peak(hi)[1] > -c_n:
        raise ConvergenceError("exponent bracket too small")
    theta2, value = peak(0.5 * (lo + hi))
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        theta2, value = peak(mid)
        if value > -c_n:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    c_t = 0.5 * (lo + hi)
    theta2, value = peak(c_t)
    residual = abs(value + c_n)
    if residual > 1e-9:
        raise ConvergenceError(f"exponent residual {residual:.3g} after {max_iter} steps")
    ratio = c_t / -math.log2(asy.collision_base(asy.THIRD_PI, model))
    return SieveExponents(model, c_n, c_t, theta2, c_n + c_t, ratio, residual)


# -- bases -----------------------------------------------------------------

def _bareiss_det(m: Sequence[Sequence[int]]) -> int:
    a = [[int(v) for v in row] for row in m]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


@dataclass(frozen=True, eq=False)
class LatticeBasis:
    """Square integer basis; *columns* are the basis vectors."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.int64, ndmin=2)
        if m.shape[0] != m.shape[1]:
            raise DomainError("basis must be square")
        if np.any(np.abs(m) >= MAX_ENTRY):
            raise DomainError("basis entries must be below 2^30 in magnitude")
        if _bareiss_det(m.tolist()) == 0:
            raise DomainError("basis is singular")
        object.__setattr__(self, "matrix", m)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def vectors(self) -> np.ndarray:
        """Basis vectors as rows."""
        return self.matrix.T.copy()

    @classmethod
    def from_rows(cls, rows) -> "LatticeBasis":
        return cls(np.array(rows, dtype=np.int64).T)

    def combine(self, coeffs) -> np.ndarray:
        return self.matrix @ np.asarray(coeffs, dtype=np.int64)


def random_basis(d: int, seed: int, bits: int = 10) -> LatticeBasis:
    """Nonsingular basis with entries uniform in ``[-2^bits, 2^bits]``."""
    if not 1 <= bits <= 29:
        raise DomainError("bits must lie in [1, 29]")
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    bound = 1 << bits
    for _ in range(100):
        m = rng.integers(-bound, bound, size=(d, d), endpoint=True)
        try:
            return LatticeBasis(m)
        except DomainError:
            continue
    raise ConvergenceError("could not draw a nonsingular basis")


def parse_basis(text: str) -> LatticeBasis:
    """Whitespace-separated integer matrix; each line is one basis vector."""
    rows = [[int(tok) for tok in line.split()] for line in text.splitlines() if line.strip()]
    return LatticeBasis.from_rows(rows)


def _gso(rows: np.ndarray):
    r = np.linalg.qr(rows.astype(np.float64).T, mode="r")
    diag = np.diag(r).copy()
    mu = (r / diag[:, None]).T
    return mu, diag * diag


def lll_reduce(rows, delta: float = 0.99):
    """LLL-reduce integer row vectors.

    Returns ``(reduced, transform)`` with ``reduced = transform @ rows`` and
    ``transform`` unimodular.  Gram-Schmidt data are recomputed in floating
    point after every swap, which is adequate for entries below ``2^30``
    and dimensions up to 48.
    """
    b = np.array(rows, dtype=np.int64)
    n = b.shape[0]
    u = np.eye(n, dtype=np.int64)
    k = 1
    mu, bstar = _gso(b)
    guard = 0
    while k < n:
        guard += 1
        if guard > 200000:
            raise ConvergenceError("LLL did not terminate")
        for j in range(k - 1, -1, -1):
            q = int(round(mu[k, j]))
            if q:
                b[k] -= q * b[j]
                u[k] -= q * u[j]
                mu[k, :j + 1] -= q * mu[j, :j + 1]
        if abs(mu[k, k - 1]) > 0.51:
            mu, bstar = _gso(b)
            continue
        if bstar[k] >= (delta - mu[k, k - 1] ** 2) * bstar[k - 1]:
            k += 1
        else:
            b[[k - 1, k]] = b[[k, k - 1]]
            u[[k - 1, k]] = u[[k, k - 1]]
            mu, bstar = _gso(b)
            k = max(k - 1, 1)
    return b, u


# -- exact shortest vectors -----------------------------------------------

def _shortest_enum(rows: np.ndarray, radius_sq: float):
    """Fincke-Pohst search for the shortest nonzero ``x @ rows`` within ``R``.

    Returns ``((x, exact_sq_norm) or None, nodes)``.  Candidate norms are
    recomputed exactly in integers; the floating radius only prunes.
    """
    n = rows.shape[0]
    mu, bstar = _gso(rows)
    x = np.zeros(n, dtype=np.int64)
    state = {"r2": radius_sq * (1.0 + 1e-9) + 1e-9, "best": None, "nodes": 0}

    def visit(i: int, partial: float) -> None:
        c = -float(mu[i + 1:, i] @ x[i + 1:]) if i + 1 < n else 0.0
        width = math.sqrt(max(state["r2"] - partial, 0.0) / bstar[i])
        for xi in range(math.ceil(c - width), math.floor(c + width) + 1):
            state["nodes"] += 1
            x[i] = xi
            dist = partial + (xi - c) ** 2 * bstar[i]
            if dist > state["r2"]:
                continue
            if i:
                visit(i - 1, dist)
            elif np.any(x):
                v = x @ rows
                exact = int(v @ v)
                if state["best"] is None or exact < state["best"][1]:
                    state["best"] = (x.copy(), exact)
                    state["r2"] = min(state["r2"], exact * (1.0 + 1e-9))
        x[i] = 0

    visit(n - 1, 0.0)
    return state["best"], state["nodes"]


def enumeration_oracle(basis: LatticeBasis, return_vector: bool = False):
    """Exact shortest nonzero norm (``d <= 12``).

    The basis is LLL-reduced, then every lattice point inside the ball whose
    radius is the shortest reduced basis vector is enumerated.
    """
    if basis.d > 12:
        raise DomainError("enumeration oracle supports d <= 12")
    reduced, transform = lll_reduce(basis.vectors)
    norms = np.einsum("ij,ij->i", reduced, reduced)
    x, _ = _shortest_enum(reduced, float(norms.min()))
    if x is None:
        j = int(np.argmin(norms))
        vec, sq = reduced[j], int(norms[j])
        coeffs = transform[j]
    else:
        coeffs = x[0] @ transform
        vec, sq = x[0] @ reduced, x[1]
    norm = math.sqrt(sq)
    if return_vector:
        return norm, vec, coeffs
    return norm


def box_bounds(basis: LatticeBasis, radius: float) -> np.ndarray:
    """Proven coefficient bounds ``|x_i| <= radius * |row_i(B^-1)|``."""
    inv = np.linalg.inv(basis.matrix.astype(np.float64))
    return np.floor(radius * np.linalg.norm(inv, axis=1) * (1.0 + 1e-9) + 1e-9).astype(np.int64)


def box_oracle(basis: LatticeBasis, box: int = 5) -> float:
    """Shortest nonzero norm by exhaustive search over ``[-box, box]^d``.

    Raises
    ------
    BoxTooSmallError
        If the proven coefficient bound for vectors no longer than the
        shortest basis column exceeds ``box``.
    """
    cols = basis.vectors
    radius = math.sqrt(float(np.einsum("ij,ij->i", cols, cols).min()))
    need = box_bounds(basis, radius)
    if np.any(need > box):
        raise BoxTooSmallError(f"proven bound {int(need.max())} exceeds box {box}")
    d = basis.d
    if (2 * box + 1) ** d > 5_000_000:
        raise DomainError("box too large for exhaustive search")
    grids = np.stack(np.meshgrid(*[np.arange(-box, box + 1)] * d, indexing="ij"),
                     -1).reshape(-1, d)
    grids = grids[np.any(grids != 0, axis=1)]
    vecs = grids @ basis.matrix.T
    return math.sqrt(float(np.einsum("ij,ij->i", vecs, vecs).min()))


# -- sampling --------------------------------------------------------------

def sample_lattice_vector(basis: LatticeBasis, seed=None, s: float = 1.0,
                          rng: Optional[np.random.Generator] = None, retries: int = 100):
    """Nonzero ``B c`` with ``c = round(s * g)``, ``g`` standard Gaussian.

    Returns ``(vector, coeffs)``.
    """
    if rng is None:
        rng = np.random.default_rng(None if seed is None else int(seed) & 0xFFFFFFFFFFFFFFFF)
    for _ in range(retries):
        c = np.rint(s * rng.standard_normal(basis.d)).astype(np.int64)
        if np.any(c):
            return basis.combine(c), c
    raise ConvergenceError("sampler kept drawing the zero vector; increase s")


# -- sieve -----------------------------------------------------------------

class SieveBackend(str, Enum):
    LINEAR = "Linear"
    HYPERPLANE_LSH = "HyperplaneLSH"
    HYPERCUBE_LSH = "HypercubeLSH"

    @classmethod
    def parse(cls, value) -> "SieveBackend":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        for b in cls:
            if b.value.lower() == key:
                return b
        raise ValueError(f"unknown backend {value!r}")


@dataclass
class SieveConfig:
    backend: SieveBackend = SieveBackend.LINEAR
    max_samples: int = 20000
    seed: int = 0
    sigma: float = 0.3
    stable_window: int = 1000
    lll: bool = True
    lsh_tables: Optional[int] = None
    lsh_bits: Optional[int] = None
    rebuild_growth: float = 0.25
    min_lsh_list: int = 32
    list_cap: Optional[int] = None

    def __post_init__(self):
        self.backend = SieveBackend.parse(self.backend)


def default_list_cap(d: int) -> int:
    """Ten times the ``(4/3)^(d/2)`` list size of pairwise-reduced vectors."""
    return int(10.0 * (4.0 / 3.0) ** (d / 2.0))


@dataclass
class SieveResult:
    shortest: np.ndarray
    coeffs: np.ndarray
    norm: float
    list_size_peak: int
    reductions: int
    samples: int
    comparisons: int
    collisions: int
    rebuilds: int = 0
    list_size: int = 0
    evictions: int = 0
    final_list: Optional[np.ndarray] = field(default=None, repr=False)


class _List:
    """Growable store of ``[vector | coeffs]`` rows with lazy deletion."""

    def __init__(self, d: int):
        self.d = d
        self.rows = np.zeros((64, 2 * d), dtype=np.int64)
        self.alive = np.zeros(64, dtype=bool)
        self.sqnorm = np.zeros(64, dtype=np.int64)
        self.size = 0
        self.count = 0

    def add(self, row: np.ndarray) -> int:
        if self.size == self.rows.shape[0]:
            cap = 2 * self.size
            self.rows = np.resize(self.rows, (cap, 2 * self.d))
            self.alive = np.concatenate([self.alive, np.zeros(cap - self.size, bool)])
            self.sqnorm = np.concatenate([self.sqnorm, np.zeros(cap - self.size, np.int64)])
        j = self.size
        self.rows[j] = row
        self.alive[j] = True
        self.sqnorm[j] = int(row[:self.d] @ row[:self.d])
        self.size += 1
        self.count += 1
        return j

    def remove(self, j: int):
        self.alive[j] = False
        self.count -= 1

    def live(self) -> np.ndarray:
        return np.flatnonzero(self.alive[:self.size])

    def compact(self) -> None:
        keep = self.live()
        n = keep.size
        cap = max(64, 1 << int(n).bit_length())
        rows = np.zeros((cap, 2 * self.d), dtype=np.int64)
        rows[:n] = self.rows[keep]
        sq = np.zeros(cap, dtype=np.int64)
        sq[:n] = self.sqnorm[keep]
        alive = np.zeros(cap, dtype=bool)
        alive[:n] = True
        self.rows, self.sqnorm, self.alive, self.size = rows, sq, alive, n


def lsh_shape(d: int, backend: SieveBackend, seed: int = 0, trials: int = 20000):
    """Tables and bits per table for the LSH backends.

    Uses ``t = ceil(2^(c_t d))`` tables with ``c_t`` from
    :func:`sieve_exponents`, and as many bits per table as make the
    one-table collision probability at ``pi/3`` closest to ``1/t``.
    Hyperplane probabilities are exact; partial hypercube ones are
    measured at the actual ``d`` because the asymptotic base is far off at
    desk-scale dimensions.

    Returns ``(tables, bits)``; for the hypercube backend ``bits`` is ``d'``.
    """
    from .montecarlo import estimate_collision
    model = (asy.Model.HYPERPLANE if backend is SieveBackend.HYPERPLANE_LSH
             else asy.Model.HYPERCUBE)
    t = max(1, math.ceil(2.0 ** (sieve_exponents(model).c_t * d)))
    target = -math.log(t)
    if model is asy.Model.HYPERPLANE:
        k = max(1, round(target / math.log(2.0 / 3.0)))
        return t, int(k)
    best, best_gap = 1, math.inf
    for dp in range(1, d + 1):
        est = estimate_collision(d, dp, asy.THIRD_PI, trials, seed)
        if est.successes == 0:
            break
        gap = abs(math.log(est.p_hat) - target)
        if gap < best_gap:
            best, best_gap = dp, gap
        elif est.p_hat < 1.0 / t:
            break
    return t, best


class _Buckets:
    """LSH tables over list slots, rebuilt as the list grows."""

    def __init__(self, store: _List, backend: SieveBackend, cfg: SieveConfig):
        from . import index as idx
        self._idx = idx
        self.store = store
        self.cfg = cfg
        d = store.d
        tables, bits = lsh_shape(d, backend, cfg.seed)
        if cfg.lsh_tables is not None:
            tables = cfg.lsh_tables
        if backend is SieveBackend.HYPERPLANE_LSH:
            self.family, self.k, self.dprime = idx.Family.HYPERPLANE, cfg.lsh_bits or bits, 1
        else:
            self.family, self.k = idx.Family.HYPERCUBE, 1
            self.dprime = cfg.lsh_bits or bits
        self.t = tables
        self.built_at = 0
        self.rebuilds = 0
        self.hashers = []
        self.tables: List[Dict[bytes, list]] = []

    def rebuild(self) -> None:
        idx = self._idx
        self.store.compact()
        params = idx.IndexParams(self.store.d, self.dprime, self.k, self.t, self.family,
                                 seed=self.cfg.seed + 7919 * (self.rebuilds + 1))
        self.hashers = [idx._TableHasher(params, i) for i in range(params.t)]
        live = self.store.live()
        vecs = self.store.rows[live, :self.store.d].astype(np.float64)
        self.tables = []
        for h in self.hashers:
            table: Dict[bytes, list] = {}
            if live.size:
                for j, code in zip(live, h.codes(vecs)):
                    table.setdefault(code.tobytes(), []).append(int(j))
            self.tables.append(table)
        self.built_at = self.store.count
        self.rebuilds += 1

    def _keys(self, v: np.ndarray) -> List[bytes]:
        x = v[None, :self.store.d].astype(np.float64)
        return [h.codes(x)[0].tobytes() for h in self.hashers]

    def insert(self, j: int) -> None:
        for key, table in zip(self._keys(self.store.rows[j]), self.tables):
            table.setdefault(key, []).append(j)
        if self.store.count > (1.0 + self.cfg.rebuild_growth) * max(self.built_at, 1):
            self.rebuild()

    def candidates(self, v: np.ndarray) -> np.ndarray:
        found = [table.get(key) for key, table in zip(self._keys(v), self.tables)]
        found = [f for f in found if f]
        if not found:
            return np.empty(0, dtype=np.int64)
        c = np.unique(np.concatenate([np.asarray(f, dtype=np.int64) for f in found]))
        return c[self.store.alive[c]]


def _reduce_loop(v, store: _List, buckets: Optional[_Buckets]):
    """Reduce ``v`` against its candidate partners to a fixpoint."""
    comps = reds = 0
    d = store.d
    while True:
        cand = store.live() if buckets is None else buckets.candidates(v)
        if cand.size == 0:
            return cand, comps, reds
        c, r = _backend.reduce_against(v, np.ascontiguousarray(store.rows[cand]), d)
        comps += c
        reds += r
        if r == 0 or buckets is None or not np.any(v[:d]):
            return cand, comps, reds


def nv_sieve(basis: LatticeBasis, config: Optional[SieveConfig] = None, **kwargs) -> SieveResult:
    """Sieve sampled lattice vectors into a pairwise-reduced list.

    Each new vector is reduced against its partners (the whole list, or its
    LSH buckets) until no partner shortens it.  Zero results are counted as
    collisions.  Otherwise list vectors that the newcomer can shorten leave
    the list and are queued for reduction themselves, and the newcomer is
    inserted.  The run stops after ``max_samples`` samples or once the
    shortest norm has not improved for ``stable_window`` samples.
    """
    cfg = config or SieveConfig(**kwargs)
    d = basis.d
    if d > MAX_SIEVE_DIM:
        raise DomainError(f"sieve supports d <= {MAX_SIEVE_DIM}")
    rows = basis.vectors
    if cfg.lll:
        work, transform = lll_reduce(rows)
    else:
        work, transform = rows.copy(), np.eye(d, dtype=np.int64)
    work_basis = np.hstack([work, transform])
    rng = np.random.default_rng(int(cfg.seed) & 0xFFFFFFFFFFFFFFFF)

    store = _List(d)
    buckets = None
    if cfg.backend is not SieveBackend.LINEAR:
        buckets = _Buckets(store, cfg.backend, cfg)
        buckets.rebuild()

    best_sq, best_row = None, None
    peak = comparisons = reductions = collisions = samples = evictions = 0
    cap = cfg.list_cap or default_list_cap(d)
    since_improve = 0
    # seed the list with the (reduced) basis itself
    queue: List[np.ndarray] = [r.copy() for r in work_basis[::-1]]

    while True:
        if queue:
            v = queue.pop()
        else:
            if samples >= cfg.max_samples or since_improve >= cfg.stable_window:
                break
            c = np.rint(cfg.sigma * rng.standard_normal(d)).astype(np.int64)
            if not np.any(c):
                continue
            v = c @ work_basis
            samples += 1
            since_improve += 1
        active = buckets if (buckets is not None and store.count >= cfg.min_lsh_list) else None
        cand, comps, reds = _reduce_loop(v, store, active)
        comparisons += comps
        reductions += reds
        sq = int(v[:d] @ v[:d])
        if sq == 0:
            collisions += 1
            continue
        if cand.size:
            dots = store.rows[cand, :d] @ v[:d]
            comparisons += int(cand.size)
            shrink = cand[2 * np.abs(dots) > sq]
            for j in shrink:
                queue.append(store.rows[j].copy())
                store.remove(int(j))
        j = store.add(v)
        if buckets is not None:
            buckets.insert(j)
        if store.count > cap:
            live = store.live()
            store.remove(int(live[np.argmax(store.sqnorm[live])]))
            evictions += 1
        peak = max(peak, store.count)
        if best_sq is None or sq < best_sq:
            best_sq, best_row = sq, v.copy()
            since_improve = 0

    shortest = best_row[:d].copy()
    coeffs = best_row[d:].copy()
    if not np.array_equal(basis.combine(coeffs), shortest):
        raise AssertionError("coefficient bookkeeping diverged from the lattice vector")
    return SieveResult(shortest, coeffs, math.sqrt(best_sq), peak, reductions, samples,
                       comparisons, collisions, buckets.rebuilds if buckets else 0, store.count,
                       evictions, store.rows[store.live()].copy())
