"""Multi-table LSH index for angular near-neighbour search.

Each of ``t`` tables hashes a point with ``k`` independent hash functions
and uses the concatenated code as bucket key.  A query collects the union
of its buckets and verifies every candidate with an exact inner product.

Hash functions per table:

* ``Hyperplane``: ``k`` Gaussian normals, one bit each.
* ``Hypercube``: ``k`` independent rotations, ``d'`` sign bits each (the
  first ``d'`` rotated coordinates).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

import numpy as np

from . import asymptotics as asy
from . import rotations as rot
from .errors import DegenerateError, DomainError

DEFAULT_DELTA = 0.1


class Family(str, Enum):
    HYPERPLANE = "Hyperplane"
    HYPERCUBE = "Hypercube"

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for f in cls:
            if f.value.lower() == key:
                return f
        raise ValueError(f"unknown family {value!r}")


@dataclass(frozen=True)
class IndexParams:
    d: int
    dprime: int
    k: int
    t: int
    family: Family
    rotation_kind: rot.RotationKind = rot.RotationKind.GRAM_SCHMIDT_ROWS
    seed: int = 0
    rounds: int = 3

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        object.__setattr__(self, "rotation_kind", rot.RotationKind.parse(self.rotation_kind))
        if self.family is Family.HYPERPLANE and self.dprime != 1:
            object.__setattr__(self, "dprime", 1)
        if not 1 <= self.dprime <= self.d:
            raise DomainError("need 1 <= dprime <= d")
        if self.k < 1 or self.t < 1:
            raise DomainError("k and t must be positive")
        if self.code_length > rot.MAX_CODE_BITS:
            raise DomainError(f"code length {self.code_length} exceeds {rot.MAX_CODE_BITS}")

    @property
    def code_length(self) -> int:
        return self.k * self.dprime


def per_hash_collision(theta: float, family, d: int, dprime: int) -> float:
    """Asymptotic collision probability of one hash function.

    Hypercube hashes use ``base ** dprime`` with the base taken in the
    ``pi/2`` left limit, so that orthogonal pairs keep a nonzero estimate.
    """
    family = Family.parse(family)
    if family is Family.HYPERPLANE:
        return asy.hyperplane_collision(theta)
    return asy.collision_base(theta, asy.Model.HYPERCUBE) ** dprime


def tune_params(n: int, theta1: float, theta2: float, family, d: int,
                dprime: Optional[int] = None, delta: float = DEFAULT_DELTA, seed: int = 0,
                rotation_kind=rot.RotationKind.GRAM_SCHMIDT_ROWS,
                p1: Optional[float] = None, p2: Optional[float] = None) -> IndexParams:
    """Choose ``(k, t)`` so a neighbour at ``theta1`` is missed with prob. ``delta``.

    ``k = max(1, round(ln n / -ln p2))`` makes far points collide about once
    per table; ``t = ceil(p1**-k ln(1/delta))`` tables then catch the near
    point with probability about ``1 - delta``.  ``p1``/``p2`` default to
    the asymptotic per-hash collision probabilities and may be overridden
    by measured ones (see :func:`calibrate`).
    """
    family = Family.parse(family)
    if n < 2:
        raise DomainError("need n >= 2")
    if not theta1 < theta2:
        raise DomainError("need theta1 < theta2")
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0, 1)")
    dprime = 1 if family is Family.HYPERPLANE else int(dprime or d)
    if p1 is None:
        p1 = per_hash_collision(theta1, family, d, dprime)
    if p2 is None:
        p2 = per_hash_collision(theta2, family, d, dprime)
    if p2 <= 0.0 or p2 >= 1.0 or p1 <= 0.0:
        raise DegenerateError(f"degenerate collision probabilities p1={p1}, p2={p2}")
    kmax = max(1, rot.MAX_CODE_BITS // dprime)
    k = min(kmax, max(1, int(round(math.log(n) / -math.log(p2)))))
    return IndexParams(d, dprime, k, tables_needed(p1, k, delta), family, rotation_kind,
                       int(seed))


def tables_needed(p1: float, k: int, delta: float = DEFAULT_DELTA) -> int:
    """``ceil(p1**-k ln(1/delta))``: tables that miss a near point w.p. about ``delta``."""
    if not 0.0 < p1 <= 1.0:
        raise DegenerateError(f"p1 must lie in (0, 1], got {p1}")
    return max(1, int(math.ceil(p1 ** (-k) * math.log(1.0 / delta))))


def calibrate(theta: float, d: int, dprime: int, trials: int, seed: int) -> float:
    """Measured one-hash hypercube collision probability at finite ``d``."""
    from .montecarlo import estimate_collision
    est = estimate_collision(d, dprime, theta, trials, seed)
    if est.successes == 0:
        raise DegenerateError("no collisions observed; increase trials")
    return est.p_hat


# -- data ------------------------------------------------------------------

@dataclass
class Dataset:
    vectors: np.ndarray
    ids: np.ndarray

    @classmethod
    def from_array(cls, x, ids=None) -> "Dataset":
        x = np.array(x, dtype=np.float64, ndmin=2)
        norms = np.linalg.norm(x, axis=1)
        if np.any(norms == 0.0) or not np.all(np.isfinite(norms)):
            raise DomainError("dataset contains zero or non-finite vectors")
        ids = np.arange(x.shape[0], dtype=np.int64) if ids is None else np.asarray(ids, np.int64)
        return cls(np.ascontiguousarray(x / norms[:, None]), ids)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class QueryReport:
    candidates_examined: int
    unique_candidates: int
    best_id: Optional[int]
    best_angle: float
    tables_hit: int
    found: bool


def _table_seed(seed: int, table: int, j: int) -> int:
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(table, j))
    return int(ss.generate_state(1, np.uint64)[0])


class _TableHasher:
    """All hash functions of one table."""

    def __init__(self, params: IndexParams, table: int):
        p = params
        self.matrix = None
        self.rotations = None
        if p.family is Family.HYPERPLANE:
            g = np.random.default_rng(_table_seed(p.seed, table, 0)).standard_normal((p.k, p.d))
            self.matrix = np.ascontiguousarray(g)
        elif p.rotation_kind is rot.RotationKind.PSEUDO_STRUCTURED:
            self.rotations = [rot.pseudo_rotation(p.d, p.rounds, _table_seed(p.seed, table, j),
                                                  p.dprime) for j in range(p.k)]
        else:
            blocks = [rot.make_rotation(p.rotation_kind, p.d, p.dprime,
                                        _table_seed(p.seed, table, j)).rows
                      for j in range(p.k)]
            self.matrix = np.ascontiguousarray(np.vstack(blocks))

    def codes(self, x: np.ndarray) -> np.ndarray:
        """Packed codes, one row of uint64 words per input row."""
        if self.matrix is not None:
            proj = x @ self.matrix.T
        else:
            proj = np.hstack([r.apply(x) for r in self.rotations])
        return rot.pack_bits(rot.sign_bits(proj))


class LSHIndex:
    """Immutable multi-table index; build with :func:`build`."""

    def __init__(self, data: Dataset, params: IndexParams,
                 hashers: List[_TableHasher], tables: List["Table"]):
        self.data = data
        self.params = params
        self.hashers = hashers
        self.tables = tables

    @property
    def n(self) -> int:
        return self.data.n

    def query_codes(self, q: np.ndarray) -> List[np.ndarray]:
        return [h.codes(q[None, :])[0] for h in self.hashers]

    def query(self, q, theta1: float) -> QueryReport:
        return query(self, q, theta1)


def _as_keys(codes: np.ndarray) -> np.ndarray:
    """One sortable scalar per row of packed words."""
    codes = np.ascontiguousarray(codes)
    if codes.shape[1] == 1:
        return codes[:, 0]
    return codes.view(np.dtype((np.void, 8 * codes.shape[1]))).reshape(-1)


class Table:
    """Sorted-array map from packed code to the ids in its bucket."""

    __slots__ = ("keys", "offsets", "ids")

    def __init__(self, codes: np.ndarray, ids: np.ndarray):
        keys = _as_keys(codes)
        order = np.argsort(keys, kind="stable")
        skeys = keys[order]
        starts = np.flatnonzero(np.concatenate([[True], skeys[1:] != skeys[:-1]]))
        self.keys = skeys[starts]
        self.offsets = np.append(starts, skeys.size)
        self.ids = ids[order]

    def get(self, code_row: np.ndarray) -> Optional[np.ndarray]:
        key = _as_keys(code_row[None, :])[0]
        j = int(np.searchsorted(self.keys, key))
        if j < self.keys.size and self.keys[j] == key:
            return self.ids[self.offsets[j]:self.offsets[j + 1]]
        return None

    def buckets(self) -> Dict[bytes, np.ndarray]:
        return {self.keys[j].tobytes(): self.ids[self.offsets[j]:self.offsets[j + 1]]
                for j in range(self.keys.size)}

    def __len__(self) -> int:
        return self.keys.size


def build(data: Dataset, params: IndexParams) -> LSHIndex:
    """Hash every point into ``params.t`` tables."""
    if data.n < 1:
        raise DomainError("dataset is empty")
    if data.d != params.d:
        raise DomainError(f"dataset dimension {data.d} differs from params.d {params.d}")
    hashers, tables = [], []
    for i in range(params.t):
        h = _TableHasher(params, i)
        hashers.append(h)
        tables.append(Table(h.codes(data.vectors), data.ids))
    return LSHIndex(data, params, hashers, tables)


def query(index: LSHIndex, q, theta1: float) -> QueryReport:
    """Union of the query's buckets, verified by exact angles.

    Among candidates at equal angle the lowest id wins.
    """
    q = np.asarray(q, dtype=np.float64)
    nq = np.linalg.norm(q)
    if nq == 0.0:
        raise DomainError("query must be nonzero")
    q = q / nq
    hits = []
    for code, table in zip(index.query_codes(q), index.tables):
        bucket = table.get(code)
        if bucket is not None:
            hits.append(bucket)
    examined = int(sum(b.size for b in hits))
    if not hits:
        return QueryReport(0, 0, None, math.pi, 0, False)
    cand = np.unique(np.concatenate(hits))
    pos = _positions(index, cand)
    cos = np.clip(index.data.vectors[pos] @ q, -1.0, 1.0)
    angles = np.arccos(cos)
    j = int(np.argmin(angles))
    best = float(angles[j])
    return QueryReport(examined, int(cand.size), int(cand[j]), best, len(hits),
                       best <= theta1 + 1e-9)


def _positions(index: LSHIndex, ids: np.ndarray) -> np.ndarray:
    ids_all = index.data.ids
    if ids_all[0] == 0 and ids_all[-1] == ids_all.size - 1:
        return ids
    order = np.argsort(ids_all)
    return order[np.searchsorted(ids_all[order], ids)]


# -- experiments -----------------------------------------------------------

def random_unit(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1)[:, None]


def plant_at_angle(q: np.ndarray, theta: float, rng: np.random.Generator) -> np.ndarray:
    """Unit vector at exactly angle ``theta`` from unit ``q``, random direction."""
    u = rng.standard_normal(q.size)
    u -= (u @ q) * q
    u /= np.linalg.norm(u)
    return math.cos(theta) * q + math.sin(theta) * u


@dataclass
class RecallSummary:
    recall: float
    planted_recall: float
    mean_candidates: float
    mean_unique: float
    build_time: float
    query_time: float
    params: IndexParams = field(repr=False, default=None)

    def as_dict(self) -> dict:
        p = self.params
        out = {k: getattr(self, k) for k in ("recall", "planted_recall", "mean_candidates",
                                                 "mean_unique", "build_time", "query_time")}
        if p is not None:
            out.update(family=p.family.value, d=p.d, dprime=p.dprime, k=p.k, t=p.t,
                       code_length=p.code_length)
        return out


def synthetic_benchmark(n: int, d: int, theta1: float, num_queries: int, seed: int):
    """``n`` points with one neighbour planted at ``theta1`` per query.

    The first ``num_queries`` ids are the planted neighbours; the rest are
    uniform on the sphere.
    """
    if n < 1 or num_queries < 1:
        raise DomainError("need n, num_queries >= 1")
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    queries = random_unit(num_queries, d, rng)
    m = min(n, num_queries)
    planted = np.stack([plant_at_angle(queries[i], theta1, rng) for i in range(m)])
    rest = random_unit(n - m, d, rng)
    return Dataset.from_array(np.vstack([planted, rest])), queries, np.arange(num_queries) % n


def run_queries(index: LSHIndex, queries: np.ndarray, targets: np.ndarray, theta1: float,
                build_time: float = 0.0) -> RecallSummary:
    t0 = time.perf_counter()
    reports = [query(index, q, theta1) for q in queries]
    elapsed = time.perf_counter() - t0
    pos_of = {int(i): j for j, i in enumerate(index.data.ids)}
    planted_hits = 0
    for q, r, tgt in zip(queries, reports, targets):
        key = pos_of[int(index.data.ids[tgt])]
        qn = q / np.linalg.norm(q)
        tgt_angle = math.acos(max(-1.0, min(1.0, float(index.data.vectors[key] @ qn))))
        planted_hits += r.best_id is not None and r.best_angle <= tgt_angle + 1e-12
    m = len(reports)
    return RecallSummary(
        recall=sum(r.found for r in reports) / m,
        planted_recall=planted_hits / m,
        mean_candidates=float(np.mean([r.candidates_examined for r in reports])),
        mean_unique=float(np.mean([r.unique_candidates for r in reports])),
        build_time=build_time, query_time=elapsed / m, params=index.params)


def exhaustive_queries(data: Dataset, queries: np.ndarray, targets: np.ndarray,
                       theta1: float) -> RecallSummary:
    """Linear-scan baseline with the same report shape as :func:`run_queries`.

    Used when the dataset is too small for hashing to be meaningful.
    """
    t0 = time.perf_counter()
    q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    q = q / np.linalg.norm(q, axis=1)[:, None]
    ang = np.arccos(np.clip(q @ data.vectors.T, -1.0, 1.0))
    best = ang.min(axis=1)
    tgt = ang[np.arange(len(q)), np.asarray(targets)]
    elapsed = time.perf_counter() - t0
    return RecallSummary(recall=float(np.mean(best <= theta1 + 1e-9)),
                         planted_recall=float(np.mean(best <= tgt + 1e-12)),
                         mean_candidates=float(data.n), mean_unique=float(data.n),
                         build_time=0.0, query_time=elapsed / len(q), params=None)


def recall_experiment(n: int, d: int, theta1: float, num_queries: int,
                      params: IndexParams, seed: int = 0) -> RecallSummary:
    """Recall and candidate workload on the synthetic planted benchmark.

    ``recall`` counts queries whose best verified candidate lies within
    ``theta1``; ``planted_recall`` counts queries whose answer is at least
    as close as the planted neighbour.
    """
    data, queries, targets = synthetic_benchmark(n, d, theta1, num_queries, seed)
    t0 = time.perf_counter()
    index = build(data, params)
    return run_queries(index, queries, targets, theta1, time.perf_counter() - t0)
