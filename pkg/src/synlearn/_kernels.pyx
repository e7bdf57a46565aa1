# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for syndrome sampling and parity counting."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def xor_events(const uint64_t[:, ::1] sig, const int64_t[::1] shot_idx,
               const int64_t[::1] err_idx, Py_ssize_t n_shots):
    """out[s] = XOR of sig[e] over all events (s, e)."""
    cdef Py_ssize_t W = sig.shape[1]
    out_arr = np.zeros((n_shots, W), dtype=np.uint64)
    cdef uint64_t[:, ::1] out = out_arr
    cdef Py_ssize_t k, w, s, e
    with nogil:
        for k in range(shot_idx.shape[0]):
            s = shot_idx[k]
            e = err_idx[k]
            for w in range(W):
                out[s, w] ^= sig[e, w]
    return out_arr


def masked_parity_counts(const uint64_t[:, ::1] bits, const uint64_t[:, ::1] masks):
    """counts[j] = number of rows r with odd parity of bits[r] & masks[j]."""
    cdef Py_ssize_t N = bits.shape[0], W = bits.shape[1], K = masks.shape[0]
    counts_arr = np.zeros(K, dtype=np.int64)
    cdef int64_t[::1] counts = counts_arr
    cdef Py_ssize_t r, j, w
    cdef int par
    with nogil:
        for r in range(N):
            for j in range(K):
                par = 0
                for w in range(W):
                    par ^= __builtin_popcountll(bits[r, w] & masks[j, w]) & 1
                counts[j] += par
    return counts_arr
