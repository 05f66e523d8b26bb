"""Random rotations and the sign-pattern hash families built on them.

Three ways to realise the rotation: a Haar matrix from sign-corrected QR, a
Gram-Schmidt sweep over Gaussian rows (only the ``d'`` rows needed for
partial hashing), and a structured pseudo-random map made of random sign
flips interleaved with normalised Walsh-Hadamard transforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import _backend
from .errors import DomainError, RankDeficiencyError

MAX_CODE_BITS = 4096


class RotationKind(str, Enum):
    HAAR_QR = "HaarQR"
    GRAM_SCHMIDT_ROWS = "GramSchmidtRows"
    PSEUDO_STRUCTURED = "PseudoStructured"

    @classmethod
    def parse(cls, value) -> "RotationKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        for k in cls:
            if k.value.lower() == key:
                return k
        aliases = {"haar": cls.HAAR_QR, "gs": cls.GRAM_SCHMIDT_ROWS,
                   "gramschmidt": cls.GRAM_SCHMIDT_ROWS, "pseudo": cls.PSEUDO_STRUCTURED}
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown rotation kind {value!r}")


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)


def next_pow2(d: int) -> int:
    return 1 << max(0, int(d - 1).bit_length())


@dataclass(frozen=True, eq=False)
class Rotation:
    """Seeded orthonormal map from ``R^d`` to its first ``out_dim`` coordinates.

    Dense kinds hold the ``out_dim x d`` row block.  The structured kind
    holds ``rounds`` sign vectors of the padded length and evaluates in
    ``O(D log D)`` per vector.
    """

    kind: RotationKind
    in_dim: int
    out_dim: int
    seed: int
    rounds: int = 0
    rows: Optional[np.ndarray] = field(default=None, repr=False)
    signs: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def padded_dim(self) -> int:
        return self.signs.shape[1] if self.signs is not None else self.in_dim

    def apply(self, x) -> np.ndarray:
        """Rotated coordinates ``0..out_dim-1`` of a vector or of each row."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        xs = np.atleast_2d(x)
        if xs.shape[1] != self.in_dim:
            raise DomainError(f"expected dimension {self.in_dim}, got {xs.shape[1]}")
        if self.rows is not None:
            out = xs @ self.rows.T
        else:
            out = self._pseudo_forward(xs)[:, :self.out_dim]
        return out[0] if single else out

    def apply_full(self, x) -> np.ndarray:
        """All padded coordinates (structured) or all ``out_dim`` rows (dense)."""
        if self.rows is not None:
            return self.apply(x)
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return self._pseudo_forward(x)

    def apply_transpose(self, y) -> np.ndarray:
        """Adjoint map; for a full rotation this is the inverse."""
        y = np.asarray(y, dtype=np.float64)
        single = y.ndim == 1
        ys = np.atleast_2d(y)
        if self.rows is not None:
            out = ys @ self.rows
        else:
            size = self.padded_dim
            buf = np.zeros((ys.shape[0], size))
            buf[:, :ys.shape[1]] = ys
            scale = 1.0 / np.sqrt(size)
            for s in self.signs[::-1]:
                _backend.fwht(buf)
                buf *= scale
                buf *= s
            out = buf[:, :self.in_dim]
        return out[0] if single else out

    def matrix(self) -> np.ndarray:
        """Realised ``out_dim x in_dim`` row block."""
        if self.rows is not None:
            return self.rows.copy()
        return self.apply(np.eye(self.in_dim)).T.copy()

    def _pseudo_forward(self, xs: np.ndarray) -> np.ndarray:
        size = self.padded_dim
        buf = np.zeros((xs.shape[0], size))
        buf[:, :self.in_dim] = xs
        scale = 1.0 / np.sqrt(size)
        for s in self.signs:
            buf *= s
            _backend.fwht(buf)
            buf *= scale
        return buf


def _check_dims(d: int, out_dim: Optional[int]) -> int:
    if d < 1:
        raise DomainError("dimension must be positive")
    out_dim = d if out_dim is None else int(out_dim)
    if not 1 <= out_dim <= d:
        raise DomainError(f"out_dim must lie in [1, {d}]")
    return out_dim


def haar_matrix(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal ``d x d`` matrix.

    Plain QR of a Gaussian matrix is biased by the sign convention of the
    factorisation; flipping columns so that ``R`` has a positive diagonal
    removes the bias.
    """
    g = rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    sign = np.sign(np.diag(r))
    sign[sign == 0] = 1.0
    return q * sign


def haar_rotation(d: int, seed: int, out_dim: Optional[int] = None) -> Rotation:
    out_dim = _check_dims(d, out_dim)
    q = haar_matrix(d, _rng(seed))
    return Rotation(RotationKind.HAAR_QR, d, out_dim, int(seed),
                    rows=np.ascontiguousarray(q[:out_dim]))


def gram_schmidt_rows(rows) -> np.ndarray:
    """Orthonormalise rows in order (modified Gram-Schmidt, two passes).

    Raises
    ------
    RankDeficiencyError
        If a row has norm below 1e-12 (relative to its input norm, for
        inputs larger than 1) after removing earlier directions.
    """
    a = np.array(rows, dtype=np.float64, ndmin=2)
    m, d = a.shape
    if m > d:
        raise RankDeficiencyError(f"{m} rows cannot be independent in dimension {d}")
    out = np.empty_like(a)
    for i in range(m):
        v = a[i].copy()
        scale = max(1.0, float(np.linalg.norm(v)))
        for _ in range(2):
            for j in range(i):
                v -= (out[j] @ v) * out[j]
        nv = float(np.linalg.norm(v))
        if nv <= 1e-12 * scale:
            raise RankDeficiencyError(f"row {i} is dependent on earlier rows")
        out[i] = v / nv
    return out


def gram_schmidt_rotation(d: int, out_dim: int, seed: int) -> Rotation:
    """First ``out_dim`` rows of a Haar rotation via Gaussian rows."""
    out_dim = _check_dims(d, out_dim)
    g = _rng(seed).standard_normal((out_dim, d))
    return Rotation(RotationKind.GRAM_SCHMIDT_ROWS, d, out_dim, int(seed),
                    rows=np.ascontiguousarray(gram_schmidt_rows(g)))


def pseudo_rotation(d: int, rounds: int = 3, seed: int = 0,
                    out_dim: Optional[int] = None) -> Rotation:
    """Structured rotation ``(H S_r) ... (H S_1)`` on the zero-padded space.

    ``S_i`` are random sign diagonals and ``H`` the normalised Walsh-Hadamard
    matrix of the next power of two ``D >= d``.  ``out_dim`` may not exceed
    ``d``; coordinates beyond are available through ``apply_full``.
    """
    if d < 2:
        raise DomainError("structured rotation needs d >= 2")
    if rounds < 1:
        raise DomainError("rounds must be positive")
    out_dim = _check_dims(d, out_dim)
    size = next_pow2(d)
    signs = _rng(seed).choice(np.array([-1.0, 1.0]), size=(rounds, size))
    return Rotation(RotationKind.PSEUDO_STRUCTURED, d, out_dim, int(seed), rounds,
                    signs=signs)


def make_rotation(kind, d: int, out_dim: int, seed, rounds: int = 3) -> Rotation:
    kind = RotationKind.parse(kind)
    if kind is RotationKind.HAAR_QR:
        return haar_rotation(d, seed, out_dim)
    if kind is RotationKind.GRAM_SCHMIDT_ROWS:
        return gram_schmidt_rotation(d, out_dim, seed)
    return pseudo_rotation(d, rounds, seed, out_dim)


# -- hash codes ------------------------------------------------------------

def pack_bits(bits) -> np.ndarray:
    """Pack a boolean ``(n, L)`` array into ``(n, ceil(L/64))`` uint64 words.

    Bit ``i`` of the code is bit ``i % 64`` of word ``i // 64``.
    """
    bits = np.asarray(bits, dtype=bool)
    if bits.ndim == 1:
        return pack_bits(bits[None, :])[0]
    n, length = bits.shape
    words = max(1, -(-length // 64))
    padded = np.zeros((n, words * 64), dtype=bool)
    padded[:, :length] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").reshape(n, words)


def unpack_bits(words, length: int) -> np.ndarray:
    words = np.ascontiguousarray(np.asarray(words, dtype="<u8"))
    single = words.ndim == 1
    w = np.atleast_2d(words)
    bits = np.unpackbits(w.view(np.uint8), axis=1, bitorder="little")[:, :length]
    bits = bits.astype(bool)
    return bits[0] if single else bits


class HashCode:
    """Fixed-length bit vector packed into little-endian 64-bit words."""

    __slots__ = ("words", "length")

    def __init__(self, words, length: int):
        words = np.ascontiguousarray(np.asarray(words, dtype="<u8")).reshape(-1)
        if words.size != max(1, -(-length // 64)):
            raise ValueError("word count does not match code length")
        self.words = words
        self.length = int(length)

    @classmethod
    def from_bits(cls, bits) -> "HashCode":
        bits = np.asarray(bits, dtype=bool).reshape(-1)
        return cls(pack_bits(bits), bits.size)

    def bits(self) -> np.ndarray:
        return unpack_bits(self.words, self.length)

    def key(self) -> bytes:
        return self.words.tobytes()

    def concat(self, other: "HashCode") -> "HashCode":
        return HashCode.from_bits(np.concatenate([self.bits(), other.bits()]))

    def __len__(self) -> int:
        return self.length

    def __eq__(self, other) -> bool:
        return (isinstance(other, HashCode) and self.length == other.length
                and bool(np.array_equal(self.words, other.words)))

    def __hash__(self) -> int:
        return hash((self.length, self.key()))

    def __repr__(self) -> str:
        return "HashCode(" + "".join("1" if b else "0" for b in self.bits()) + ")"


def _nonzero(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DomainError("expected a single vector")
    if not np.any(x):
        raise DomainError("cannot hash the zero vector")
    return x


def sign_bits(coords) -> np.ndarray:
    """Sign pattern with exact zeros mapped to +1 (bit set)."""
    return np.asarray(coords) >= 0.0


def hyperplane_hash(x, normals) -> HashCode:
    """Bit ``i`` set iff ``<normals[i], x> >= 0``."""
    x = _nonzero(x)
    normals = np.atleast_2d(np.asarray(normals, dtype=np.float64))
    return HashCode.from_bits(sign_bits(normals @ x))


def hypercube_hash(x, rotation: Rotation, dprime: Optional[int] = None) -> HashCode:
    """Signs of the first ``dprime`` rotated coordinates."""
    x = _nonzero(x)
    dprime = rotation.out_dim if dprime is None else int(dprime)
    if not 1 <= dprime <= rotation.out_dim:
        raise DomainError(f"dprime must lie in [1, {rotation.out_dim}]")
    return HashCode.from_bits(sign_bits(rotation.apply(x)[:dprime]))
