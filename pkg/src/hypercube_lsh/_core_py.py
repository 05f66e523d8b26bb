"""Pure-numpy implementations of the hot kernels.

Every function here has a twin with the same name and semantics in the
compiled ``_core`` extension; ``_backend`` picks one at import time.  Both
produce identical results for identical arguments (up to last-ulp libm
differences in ``log``/``cos``/``sin``, which only matter for coordinates
within ~1e-16 of zero).
"""

import numpy as np

_M32 = np.uint64(0xFFFFFFFF)
_PHILOX_M0 = np.uint64(0xD2511F53)
_PHILOX_M1 = np.uint64(0xCD9E8D57)
_PHILOX_W0 = 0x9E3779B9
_PHILOX_W1 = 0xBB67AE85

_TWO_PI = 2.0 * np.pi
_INV_2_53 = 1.0 / 9007199254740992.0

# Chunk of trials processed per vectorised step.
_CHUNK = 1 << 14

BACKEND = "python"


def philox4x32(ctr, key):
    """Philox4x32-10 block function.

    ``ctr`` is an ``(n, 4)`` array of 32-bit counters, ``key`` a pair of
    32-bit words.  Returns the ``(n, 4)`` uint32 output block.
    """
    ctr = np.asarray(ctr, dtype=np.uint64) & _M32
    c0, c1, c2, c3 = (ctr[:, i].copy() for i in range(4))
    k0 = int(key[0]) & 0xFFFFFFFF
    k1 = int(key[1]) & 0xFFFFFFFF
    for r in range(10):
        if r:
            k0 = (k0 + _PHILOX_W0) & 0xFFFFFFFF
            k1 = (k1 + _PHILOX_W1) & 0xFFFFFFFF
        p0 = _PHILOX_M0 * c0
        p1 = _PHILOX_M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> np.uint64(32)) ^ c1 ^ np.uint64(k0),
            p1 & _M32,
            (p0 >> np.uint64(32)) ^ c3 ^ np.uint64(k1),
            p0 & _M32,
        )
    return np.stack([c0, c1, c2, c3], axis=1).astype(np.uint32)


def _split_seed(seed):
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return seed & 0xFFFFFFFF, seed >> 32


def counter_normals(seed, stream, start, stop, count):
    """Standard normals for trials ``start..stop-1``, ``count`` per trial.

    Trial ``i`` draws its values from Philox blocks with counter
    ``(j, i_lo, i_hi, stream)``; block ``j`` yields normals ``2j`` and
    ``2j+1`` via Box-Muller, so results depend only on the trial index.
    """
    m = stop - start
    nblocks = (count + 1) // 2
    out = np.empty((m, 2 * nblocks), dtype=np.float64)
    if m <= 0:
        return out[:, :count]
    key = _split_seed(seed)
    trials = np.arange(start, stop, dtype=np.uint64)
    j = np.arange(nblocks, dtype=np.uint64)
    ctr = np.empty((m, nblocks, 4), dtype=np.uint64)
    ctr[:, :, 0] = j[None, :]
    ctr[:, :, 1] = (trials & _M32)[:, None]
    ctr[:, :, 2] = (trials >> np.uint64(32))[:, None]
    ctr[:, :, 3] = np.uint64(stream) & _M32
    x = philox4x32(ctr.reshape(-1, 4), key).astype(np.uint64)
    a = ((x[:, 0] >> np.uint64(5)) << np.uint64(26)) | (x[:, 1] >> np.uint64(6))
    b = ((x[:, 2] >> np.uint64(5)) << np.uint64(26)) | (x[:, 3] >> np.uint64(6))
    u1 = 1.0 - a.astype(np.float64) * _INV_2_53
    u2 = b.astype(np.float64) * _INV_2_53
    r = np.sqrt(-2.0 * np.log(u1))
    ang = _TWO_PI * u2
    z = np.empty((x.shape[0], 2))
    z[:, 0] = r * np.cos(ang)
    z[:, 1] = r * np.sin(ang)
    out[:] = z.reshape(m, 2 * nblocks)
    return out[:, :count]


def count_collisions(d, dprime, cos_t, sin_t, seed, start, stop):
    """Number of trials in ``[start, stop)`` whose planted pair collides.

    Each trial draws the first two columns of a fresh Haar rotation by
    Gram-Schmidt on two Gaussian vectors, maps ``x = e1`` and
    ``y = cos e1 + sin e2`` through it and compares the signs of the first
    ``dprime`` coordinates (ties hash to +1).
    """
    total = 0
    for lo in range(start, stop, _CHUNK):
        hi = min(stop, lo + _CHUNK)
        g = counter_normals(seed, 0, lo, hi, 2 * d)
        g1 = g[:, :d]
        g2 = g[:, d:]
        u = g1 / np.sqrt(np.einsum("ij,ij->i", g1, g1))[:, None]
        v = g2 - np.einsum("ij,ij->i", g2, u)[:, None] * u
        v /= np.sqrt(np.einsum("ij,ij->i", v, v))[:, None]
        x = u[:, :dprime]
        y = cos_t * x + sin_t * v[:, :dprime]
        same = (x >= 0.0) == (y >= 0.0)
        total += int(np.count_nonzero(same.all(axis=1)))
    return total


def sample_angles(d, seed, start, stop):
    """Angles between independent Gaussian pairs for trials ``start..stop-1``."""
    out = np.empty(max(stop - start, 0))
    for lo in range(start, stop, _CHUNK):
        hi = min(stop, lo + _CHUNK)
        g = counter_normals(seed, 1, lo, hi, 2 * d)
        g1 = g[:, :d]
        g2 = g[:, d:]
        c = np.einsum("ij,ij->i", g1, g2) / np.sqrt(
            np.einsum("ij,ij->i", g1, g1) * np.einsum("ij,ij->i", g2, g2)
        )
        out[lo - start:hi - start] = np.arccos(np.clip(c, -1.0, 1.0))
    return out


def fwht(x):
    """In-place unnormalised Walsh-Hadamard transform along the rows of ``x``.

    ``x`` must be a C-contiguous float64 array of shape ``(n, D)`` with ``D``
    a power of two.
    """
    n, size = x.shape
    h = 1
    while h < size:
        y = x.reshape(n, size // (2 * h), 2, h)
        a = y[:, :, 0, :].copy()
        b = y[:, :, 1, :]
        y[:, :, 0, :] += b
        b *= -1.0
        b += a
        h *= 2
    return x


def reduce_against(v, cands, d):
    """Reduce lattice row ``v`` against candidate rows until no pair shortens it.

    Rows hold ``[vector | coefficients]`` as int64; only the first ``d``
    columns enter inner products.  The scan visits candidates in order and
    applies ``v <- v - sign(<v,c>) c`` whenever ``2|<v,c>| > |c|^2``; passes
    repeat until one makes no change.  ``v`` is modified in place.

    Returns ``(comparisons, reductions)``.
    """
    m = cands.shape[0]
    if m == 0:
        return 0, 0
    vecs = cands[:, :d]
    norms = np.einsum("ij,ij->i", vecs, vecs)
    comparisons = 0
    reductions = 0
    while True:
        changed = False
        pos = 0
        while pos < m:
            dots = vecs[pos:] @ v[:d]
            hit = np.flatnonzero(2 * np.abs(dots) > norms[pos:])
            if hit.size == 0:
                comparisons += m - pos
                break
            i = int(hit[0])
            comparisons += i + 1
            if dots[i] > 0:
                v -= cands[pos + i]
            else:
                v += cands[pos + i]
            reductions += 1
            changed = True
            pos += i + 1
        if not changed:
            return comparisons, reductions
