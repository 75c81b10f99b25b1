# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Mirrors ``kirinlab._pykernels`` exactly."""

import numpy as np

from libc.stdint cimport int8_t, int32_t, int64_t
from libc.stdlib cimport free, malloc


cdef extern from *:
    int __builtin_ctzll(unsigned long long)


def brute_force_max(const int64_t[::1] c, const int64_t[:, ::1] At, const int64_t[::1] b):
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    cdef Py_ssize_t i, j
    cdef unsigned long long k, total, g, best_mask = 0
    cdef int64_t obj = 0, best_val = 0, delta
    cdef int64_t *lhs = <int64_t *> malloc((m + 1) * sizeof(int64_t))
    cdef int8_t *x = <int8_t *> malloc((n + 1) * sizeof(int8_t))
    cdef Py_ssize_t viol = 0
    cdef bint found = False
    if lhs == NULL or x == NULL:
        free(lhs)
        free(x)
        raise MemoryError()
    try:
        for i in range(m):
            lhs[i] = 0
            if 0 > b[i]:
                viol += 1
        for j in range(n):
            x[j] = 0
        if viol == 0:
            found = True
            best_val = 0
            best_mask = 0
        total = 1ULL << n
        k = 1
        while k < total:
            # Gray code step k flips bit ctz(k), i.e. variable n-1-ctz(k)
            j = n - 1 - __builtin_ctzll(k)
            if x[j]:
                x[j] = 0
                delta = -1
            else:
                x[j] = 1
                delta = 1
            obj += delta * c[j]
            for i in range(m):
                if At[j, i] != 0:
                    if lhs[i] > b[i]:
                        lhs[i] += delta * At[j, i]
                        if lhs[i] <= b[i]:
                            viol -= 1
                    else:
                        lhs[i] += delta * At[j, i]
                        if lhs[i] > b[i]:
                            viol += 1
            if viol == 0:
                g = k ^ (k >> 1)
                if not found or obj > best_val or (obj == best_val and g < best_mask):
                    found = True
                    best_val = obj
                    best_mask = g
            k += 1
    finally:
        free(lhs)
        free(x)
    return bool(found), int(best_mask), int(best_val)


def propagate(int8_t[::1] x, const int64_t[::1] indptr, const int32_t[::1] indices,
              const int64_t[::1] data, const int64_t[::1] rhs,
              const int64_t[::1] colptr, const int32_t[::1] colrows):
    cdef Py_ssize_t m = rhs.shape[0]
    cdef Py_ssize_t i, k, kk, j, r, top = 0
    cdef int64_t minact, slack, a
    cdef int8_t v
    cdef Py_ssize_t *queue = <Py_ssize_t *> malloc((m + 1) * sizeof(Py_ssize_t))
    cdef int8_t *queued = <int8_t *> malloc((m + 1) * sizeof(int8_t))
    if queue == NULL or queued == NULL:
        free(queue)
        free(queued)
        raise MemoryError()
    try:
        for i in range(m):
            queue[i] = i
            queued[i] = 1
        top = m
        while top > 0:
            top -= 1
            i = queue[top]
            queued[i] = 0
            minact = 0
            for k in range(indptr[i], indptr[i + 1]):
                v = x[indices[k]]
                a = data[k]
                if v == 1:
                    minact += a
                elif v == -1 and a < 0:
                    minact += a
            if minact > rhs[i]:
                return False
            slack = rhs[i] - minact
            for k in range(indptr[i], indptr[i + 1]):
                j = indices[k]
                if x[j] != -1:
                    continue
                a = data[k]
                if a > slack:
                    x[j] = 0
                elif -a > slack:
                    x[j] = 1
                else:
                    continue
                for kk in range(colptr[j], colptr[j + 1]):
                    r = colrows[kk]
                    if not queued[r]:
                        queued[r] = 1
                        queue[top] = r
                        top += 1
        return True
    finally:
        free(queue)
        free(queued)


def greedy_assign(int depth, limits_in, bint longest_first=True):
    cdef int64_t[::1] limits = np.ascontiguousarray(limits_in, dtype=np.int64)
    cdef Py_ssize_t n_sessions = limits.shape[0]
    cdef long long n_nodes = (1LL << (depth + 1)) - 1
    cdef Py_ssize_t rl = 0, ptr = 0, pos, t, q
    cdef long long h, g, lo, hh, width
    cdef int d, k, below, d_start, d_end, d_step
    cdef int32_t s
    cdef bint ok
    ring_arr = np.empty(n_sessions, dtype=np.int32)
    cdef int32_t[::1] ring = ring_arr
    cdef int64_t[::1] counts = np.zeros(n_sessions, dtype=np.int64)
    for t in range(n_sessions):
        if limits[t] > 0:
            ring[rl] = <int32_t> t
            rl += 1
    owner_arr = np.full(n_nodes + 1, -1, dtype=np.int32)
    cdef int32_t[::1] owner = owner_arr
    if longest_first:
        d_start, d_end, d_step = depth, -1, -1
    else:
        d_start, d_end, d_step = 0, depth + 1, 1
    d = d_start
    while d != d_end and rl > 0:
        below = depth - d
        h = 1LL << d
        while h < (1LL << (d + 1)) and rl > 0:
            pos = ptr
            for t in range(rl):
                s = ring[pos]
                ok = not ((h & 1) and h > 1 and owner[h - 1] == s)
                if ok and not longest_first:
                    g = h >> 1
                    while g:
                        if owner[g] == s:
                            ok = False
                            break
                        g >>= 1
                elif ok:
                    k = 1
                    while ok and k <= below:
                        lo = h << k
                        width = 1LL << k
                        hh = lo
                        while hh < lo + width:
                            if owner[hh] == s:
                                ok = False
                                break
                            hh += 1
                        k += 1
                if ok:
                    owner[h] = s
                    counts[s] += 1
                    if counts[s] >= limits[s]:
                        for q in range(pos, rl - 1):
                            ring[q] = ring[q + 1]
                        rl -= 1
                        ptr = pos if pos < rl else 0
                    else:
                        ptr = pos + 1 if pos + 1 < rl else 0
                    break
                pos = pos + 1 if pos + 1 < rl else 0
            h += 1
        d += d_step
    return owner_arr
