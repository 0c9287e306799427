# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for nearest-codeword search and coset weights.

Signatures match :mod:`mdlab._pykernels`; see that module for semantics.
"""

import numpy as np

from libc.stdint cimport int64_t, uint64_t

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def nearest_codewords(const uint64_t[::1] words, const uint64_t[::1] codebook):
    cdef Py_ssize_t nw = words.shape[0]
    cdef Py_ssize_t nc = codebook.shape[0]
    cdef Py_ssize_t i, j
    cdef int d, best
    cdef int64_t arg
    cdef uint64_t w
    idx = np.empty(nw, dtype=np.int64)
    dist = np.empty(nw, dtype=np.int64)
    cdef int64_t[::1] iv = idx
    cdef int64_t[::1] dv = dist
    with nogil:
        for i in range(nw):
            w = words[i]
            best = 65
            arg = 0
            for j in range(nc):
                d = __builtin_popcountll(w ^ codebook[j])
                if d < best:
                    best = d
                    arg = j
                    if d == 0:
                        break
            iv[i] = arg
            dv[i] = best
    return idx, dist


def coset_min_weights(const uint64_t[::1] gens, Py_ssize_t nkeys):
    cdef Py_ssize_t ng = gens.shape[0]
    cdef Py_ssize_t head = 0, tail = 1, g
    cdef uint64_t s, t
    minw = np.full(nkeys, -1, dtype=np.int64)
    queue = np.empty(nkeys, dtype=np.uint64)
    cdef int64_t[::1] mv = minw
    cdef uint64_t[::1] qv = queue
    mv[0] = 0
    qv[0] = 0
    with nogil:
        while head < tail:
            s = qv[head]
            head += 1
            for g in range(ng):
                t = s ^ gens[g]
                if mv[t] < 0:
                    mv[t] = mv[s] + 1
                    qv[tail] = t
                    tail += 1
    return minw
