# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled candidate enumeration; same contract as ``_pysearch``."""

from libc.stdint cimport uint64_t
from libc.stdlib cimport malloc, free

cdef int FOUND = 1, NONE = 0, BUDGET = -1


cdef inline bint _passes(uint64_t mask, uint64_t* rows, int nr, uint64_t* cols, int nc,
                         uint64_t* needs, int nn) nogil:
    cdef int i
    cdef uint64_t hit
    for i in range(nr):
        if not (mask & rows[i]):
            return False
    for i in range(nc):
        hit = mask & cols[i]
        if hit & (hit - 1):
            return False
    for i in range(nn):
        if not (mask & needs[i]):
            return False
    return True


cdef uint64_t* _copy(list xs) except NULL:
    cdef Py_ssize_t i, n = len(xs)
    cdef uint64_t* out = <uint64_t*> malloc((n + 1) * sizeof(uint64_t))
    if out == NULL:
        raise MemoryError()
    for i in range(n):
        out[i] = <uint64_t> xs[i]
    return out


def first_passing(int n, row_masks, col_masks, need_masks, long long budget, int kmin=0, kmax=None):
    if not 0 <= n <= 63:
        raise ValueError("compiled kernel handles at most 63 pairs")
    cdef int hi = n if kmax is None else min(<int> kmax, n)
    cdef list rl = list(row_masks), cl = list(col_masks), nl = list(need_masks)
    cdef int nr = len(rl), nc = len(cl), nn = len(nl)
    cdef uint64_t* rows = _copy(rl)
    cdef uint64_t* cols = _copy(cl)
    cdef uint64_t* needs = _copy(nl)
    cdef int* idx = <int*> malloc((n + 1) * sizeof(int))
    cdef long long examined = 0
    cdef int k, i, j, status = NONE
    cdef uint64_t mask, found = 0
    if idx == NULL:
        free(rows); free(cols); free(needs)
        raise MemoryError()
    try:
        with nogil:
            k = kmin if kmin > 0 else 0
            while k <= hi and status == NONE:
                for i in range(k):
                    idx[i] = i
                while True:
                    if examined >= budget:
                        status = BUDGET
                        break
                    examined += 1
                    mask = 0
                    for i in range(k):
                        mask |= (<uint64_t> 1) << idx[i]
                    if _passes(mask, rows, nr, cols, nc, needs, nn):
                        status = FOUND
                        found = mask
                        break
                    # next k-combination of range(n) in lexicographic order
                    i = k - 1
                    while i >= 0 and idx[i] == n - k + i:
                        i -= 1
                    if i < 0:
                        break
                    idx[i] += 1
                    for j in range(i + 1, k):
                        idx[j] = idx[j - 1] + 1
                k += 1
    finally:
        free(rows); free(cols); free(needs); free(idx)
    return status, (found if status == FOUND else 0), examined
