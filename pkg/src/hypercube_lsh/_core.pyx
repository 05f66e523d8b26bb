# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.  Semantics mirror ``_core_py`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, cos, sin, M_PI
from libc.stdint cimport uint32_t, uint64_t, int64_t
from libc.stdlib cimport malloc, free

cnp.import_array()

BACKEND = "compiled"

cdef uint64_t PHILOX_M0 = 0xD2511F53
cdef uint64_t PHILOX_M1 = 0xCD9E8D57
cdef uint32_t PHILOX_W0 = 0x9E3779B9
cdef uint32_t PHILOX_W1 = 0xBB67AE85
cdef uint64_t MASK32 = 0xFFFFFFFFu
cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline void _philox(uint32_t* c, uint32_t k0, uint32_t k1) noexcept nogil:
    cdef uint64_t p0, p1
    cdef uint32_t c0 = c[0], c1 = c[1], c2 = c[2], c3 = c[3]
    cdef int r
    for r in range(10):
        if r:
            k0 = k0 + PHILOX_W0
            k1 = k1 + PHILOX_W1
        p0 = PHILOX_M0 * <uint64_t>c0
        p1 = PHILOX_M1 * <uint64_t>c2
        c0, c1, c2, c3 = (<uint32_t>(p1 >> 32)) ^ c1 ^ k0, <uint32_t>p1, \
                         (<uint32_t>(p0 >> 32)) ^ c3 ^ k1, <uint32_t>p0
    c[0] = c0
    c[1] = c1
    c[2] = c2
    c[3] = c3


cdef inline void _normals(uint64_t trial, uint32_t stream, uint32_t k0,
                          uint32_t k1, int count, double* out) noexcept nogil:
    cdef uint32_t c[4]
    cdef uint64_t a, b
    cdef double u1, u2, r
    cdef int j, nblocks = (count + 1) // 2
    for j in range(nblocks):
        c[0] = <uint32_t>j
        c[1] = <uint32_t>(trial & MASK32)
        c[2] = <uint32_t>(trial >> 32)
        c[3] = stream
        _philox(c, k0, k1)
        a = ((<uint64_t>(c[0] >> 5)) << 26) | (c[1] >> 6)
        b = ((<uint64_t>(c[2] >> 5)) << 26) | (c[3] >> 6)
        u1 = 1.0 - <double>a * INV_2_53
        u2 = <double>b * INV_2_53
        r = sqrt(-2.0 * log(u1))
        out[2 * j] = r * cos(2.0 * M_PI * u2)
        if 2 * j + 1 < count:
            out[2 * j + 1] = r * sin(2.0 * M_PI * u2)


def philox4x32(ctr, key):
    cdef cnp.ndarray[cnp.uint32_t, ndim=2] c = np.ascontiguousarray(
        np.asarray(ctr, dtype=np.uint64) & 0xFFFFFFFF, dtype=np.uint32)
    cdef uint32_t k0 = <uint32_t>(int(key[0]) & 0xFFFFFFFF)
    cdef uint32_t k1 = <uint32_t>(int(key[1]) & 0xFFFFFFFF)
    cdef Py_ssize_t i
    for i in range(c.shape[0]):
        _philox(&c[i, 0], k0, k1)
    return c


def counter_normals(seed, uint32_t stream, Py_ssize_t start, Py_ssize_t stop,
                    int count):
    cdef uint64_t s = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint32_t k0 = <uint32_t>(s & MASK32), k1 = <uint32_t>(s >> 32)
    cdef Py_ssize_t m = max(stop - start, 0)
    cdef int padded = 2 * ((count + 1) // 2)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((m, padded))
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            _normals(<uint64_t>(start + i), stream, k0, k1, padded, &out[i, 0])
    return out[:, :count]


def count_collisions(int d, int dprime, double cos_t, double sin_t, seed,
                     Py_ssize_t start, Py_ssize_t stop):
    cdef uint64_t s = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint32_t k0 = <uint32_t>(s & MASK32), k1 = <uint32_t>(s >> 32)
    cdef double* g = <double*>malloc(2 * d * sizeof(double))
    cdef double* g1
    cdef double* g2
    cdef double n1, proj, n2, xi, yi
    cdef Py_ssize_t i, total = 0
    cdef int j, ok
    if g == NULL:
        raise MemoryError()
    g1 = g
    g2 = g + d
    with nogil:
        for i in range(start, stop):
            _normals(<uint64_t>i, 0, k0, k1, 2 * d, g)
            n1 = 0.0
            for j in range(d):
                n1 = n1 + g1[j] * g1[j]
            n1 = sqrt(n1)
            proj = 0.0
            for j in range(d):
                g1[j] = g1[j] / n1
                proj = proj + g2[j] * g1[j]
            n2 = 0.0
            for j in range(d):
                g2[j] = g2[j] - proj * g1[j]
                n2 = n2 + g2[j] * g2[j]
            n2 = sqrt(n2)
            ok = 1
            for j in range(dprime):
                xi = g1[j]
                yi = cos_t * xi + sin_t * (g2[j] / n2)
                if (xi >= 0.0) != (yi >= 0.0):
                    ok = 0
                    break
            total += ok
    free(g)
    return total


def sample_angles(int d, seed, Py_ssize_t start, Py_ssize_t stop):
    cdef uint64_t s = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint32_t k0 = <uint32_t>(s & MASK32), k1 = <uint32_t>(s >> 32)
    cdef Py_ssize_t m = max(stop - start, 0)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(m)
    cdef double* g = <double*>malloc(2 * d * sizeof(double))
    cdef double a, b, ab, c
    cdef Py_ssize_t i
    cdef int j
    if g == NULL:
        raise MemoryError()
    with nogil:
        for i in range(m):
            _normals(<uint64_t>(start + i), 1, k0, k1, 2 * d, g)
            a = 0.0
            b = 0.0
            ab = 0.0
            for j in range(d):
                a = a + g[j] * g[j]
                b = b + g[d + j] * g[d + j]
                ab = ab + g[j] * g[d + j]
            c = ab / sqrt(a * b)
            if c > 1.0:
                c = 1.0
            elif c < -1.0:
                c = -1.0
            out[i] = c
    free(g)
    return np.arccos(out)


def fwht(cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] x):
    cdef Py_ssize_t n = x.shape[0], size = x.shape[1], r, h, i, j
    cdef double a, b
    cdef double* row
    with nogil:
        for r in range(n):
            row = &x[r, 0]
            h = 1
            while h < size:
                i = 0
                while i < size:
                    for j in range(i, i + h):
                        a = row[j]
                        b = row[j + h]
                        row[j] = a + b
                        row[j + h] = a - b
                    i += 2 * h
                h *= 2
    return x


def reduce_against(cnp.ndarray[cnp.int64_t, ndim=1] v,
                   cnp.ndarray[cnp.int64_t, ndim=2] cands, int d):
    cdef Py_ssize_t m = cands.shape[0], width = cands.shape[1], i, j
    cdef cnp.ndarray[cnp.int64_t, ndim=1] norms = np.empty(m, dtype=np.int64)
    cdef int64_t dot, acc
    cdef Py_ssize_t comparisons = 0, reductions = 0
    cdef bint changed
    if m == 0:
        return 0, 0
    for i in range(m):
        acc = 0
        for j in range(d):
            acc += cands[i, j] * cands[i, j]
        norms[i] = acc
    while True:
        changed = False
        for i in range(m):
            dot = 0
            for j in range(d):
                dot += v[j] * cands[i, j]
            comparisons += 1
            if 2 * (dot if dot >= 0 else -dot) > norms[i]:
                if dot > 0:
                    for j in range(width):
                        v[j] -= cands[i, j]
                else:
                    for j in range(width):
                        v[j] += cands[i, j]
                reductions += 1
                changed = True
        if not changed:
            return comparisons, reductions
