# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled slotted-queue kernels; see _reference.py for the semantics."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport free, malloc

cnp.import_array()


def single_class_slot_sim(arrivals, int c, long warmup, long max_q, long max_d):
    cdef cnp.int64_t[::1] arr = np.ascontiguousarray(arrivals, dtype=np.int64)
    cdef long n = arr.shape[0]
    cdef cnp.ndarray q_counts = np.zeros(max_q + 1, dtype=np.int64)
    cdef cnp.ndarray d_counts = np.zeros(max_d + 1, dtype=np.int64)
    cdef cnp.ndarray b_counts = np.zeros(max_q + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] qc = q_counts
    cdef cnp.int64_t[::1] dc = d_counts
    cdef cnp.int64_t[::1] bc = b_counts
    cdef long t, m, q = 0, u = 0, a, p, d, served
    for t in range(n):
        q = u - c
        if q < 0:
            q = 0
        a = arr[t]
        u = q + a
        if t >= warmup:
            bc[q if q < max_q else max_q] += 1
            qc[u if u < max_q else max_q] += 1
        for m in range(1, a + 1):
            p = q + m
            d = (p + c - 1) // c
            served = t + d
            if served >= warmup and served < n:
                dc[d if d < max_d else max_d] += 1
    return q_counts, d_counts, b_counts


def two_class_slot_sim(arr_high, arr_low, int c, long warmup,
                       long max_q, long max_d):
    cdef cnp.int64_t[::1] ah = np.ascontiguousarray(arr_high, dtype=np.int64)
    cdef cnp.int64_t[::1] al = np.ascontiguousarray(arr_low, dtype=np.int64)
    cdef long n = ah.shape[0]
    cdef cnp.ndarray lq_counts = np.zeros(max_q + 1, dtype=np.int64)
    cdef cnp.ndarray ld_counts = np.zeros(max_d + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] lqc = lq_counts
    cdef cnp.int64_t[::1] ldc = ld_counts

    cdef long cap = 1 << 16
    cdef long* ring = <long*> malloc(cap * sizeof(long))
    cdef long* bigger
    cdef long head = 0, size = 0
    cdef long t, hq = 0, sh, rem, k, i, d, lq
    if ring == NULL:
        raise MemoryError()
    try:
        for t in range(n):
            sh = hq if hq < c else c
            hq -= sh
            rem = c - sh
            k = size if size < rem else rem
            for i in range(k):
                d = t - ring[head]
                head = (head + 1) & (cap - 1)
                size -= 1
                if t >= warmup:
                    ldc[d if d < max_d else max_d] += 1
            hq += ah[t]
            # grow the ring (power-of-two capacity) before a large batch
            while size + al[t] > cap:
                bigger = <long*> malloc(2 * cap * sizeof(long))
                if bigger == NULL:
                    raise MemoryError()
                for i in range(size):
                    bigger[i] = ring[(head + i) & (cap - 1)]
                free(ring)
                ring = bigger
                head = 0
                cap *= 2
            for i in range(al[t]):
                ring[(head + size) & (cap - 1)] = t
                size += 1
            if t >= warmup:
                lq = size
                lqc[lq if lq < max_q else max_q] += 1
    finally:
        free(ring)
    return lq_counts, ld_counts
