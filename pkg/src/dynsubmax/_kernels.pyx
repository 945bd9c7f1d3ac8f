# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled coverage kernels; must stay operation-for-operation in sync with
``_purekernels.PyCoverageKernel`` so both backends produce identical floats."""

import numpy as np

cimport numpy as cnp


cdef class CoverageKernel:
    cdef long long[::1] indptr
    cdef long long[::1] items
    cdef double[::1] item_w
    cdef long long[::1] _mark
    cdef long long _stamp
    cdef readonly long long n_items

    backend = "compiled"

    def __init__(self, indptr, items, item_weights):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.items = np.ascontiguousarray(items, dtype=np.int64)
        self.item_w = np.ascontiguousarray(item_weights, dtype=np.float64)
        self.n_items = self.item_w.shape[0]
        self._mark = np.zeros(self.n_items, dtype=np.int64)
        self._stamp = 0

    cpdef double union_weight(self, long long[::1] rows):
        cdef long long[::1] indptr = self.indptr
        cdef long long[::1] items = self.items
        cdef double[::1] w = self.item_w
        cdef long long[::1] mark = self._mark
        cdef Py_ssize_t i, idx
        cdef long long r, u, stamp
        cdef double acc = 0.0
        self._stamp += 1
        stamp = self._stamp
        for i in range(rows.shape[0]):
            r = rows[i]
            for idx in range(indptr[r], indptr[r + 1]):
                u = items[idx]
                if mark[u] != stamp:
                    mark[u] = stamp
                    acc += w[u]
        return acc

    cpdef long long marginals(self, long long[::1] base_rows, double base_value,
                              long long[::1] cand_rows, double[::1] out):
        cdef long long[::1] indptr = self.indptr
        cdef long long[::1] items = self.items
        cdef double[::1] w = self.item_w
        cdef long long[::1] mark = self._mark
        cdef Py_ssize_t ci, i, idx, nb = base_rows.shape[0]
        cdef long long r, b, u, stamp
        cdef long long charged = 0
        cdef double acc, gain
        for ci in range(cand_rows.shape[0]):
            r = cand_rows[ci]
            self._stamp += 1
            stamp = self._stamp
            acc = 0.0
            i = 0
            while i < nb and base_rows[i] < r:
                b = base_rows[i]
                for idx in range(indptr[b], indptr[b + 1]):
                    u = items[idx]
                    if mark[u] != stamp:
                        mark[u] = stamp
                        acc += w[u]
                i += 1
            if i < nb and base_rows[i] == r:
                out[ci] = 0.0
                continue
            for idx in range(indptr[r], indptr[r + 1]):
                u = items[idx]
                if mark[u] != stamp:
                    mark[u] = stamp
                    acc += w[u]
            while i < nb:
                b = base_rows[i]
                for idx in range(indptr[b], indptr[b + 1]):
                    u = items[idx]
                    if mark[u] != stamp:
                        mark[u] = stamp
                        acc += w[u]
                i += 1
            gain = acc - base_value
            out[ci] = gain if gain > 0.0 else 0.0
            charged += 1
        return charged

    cpdef long long tail_hit_trials(self, long long[::1] bucket_rows,
                                    long long[::1] base_rows, double thr_eff,
                                    long long[:, ::1] draws, long long m_prime):
        cdef long long[::1] indptr = self.indptr
        cdef long long[::1] items = self.items
        cdef double[::1] w = self.item_w
        cdef long long[::1] mark = self._mark
        cdef Py_ssize_t t, j, idx
        cdef long long r, u, s, d, base_stamp, stamp
        cdef long long hits = 0
        cdef double acc
        cdef long long[::1] perm = np.ascontiguousarray(bucket_rows).copy()
        cdef long long[::1] undo = np.empty(2 * m_prime, dtype=np.int64)
        self._stamp += 1
        base_stamp = self._stamp
        for j in range(base_rows.shape[0]):
            r = base_rows[j]
            for idx in range(indptr[r], indptr[r + 1]):
                mark[items[idx]] = base_stamp
        for t in range(draws.shape[0]):
            self._stamp += 1
            stamp = self._stamp
            for j in range(m_prime):
                d = draws[t, j]
                undo[2 * j] = perm[j]
                undo[2 * j + 1] = perm[d]
                perm[j], perm[d] = perm[d], perm[j]
            for j in range(m_prime - 1):
                r = perm[j]
                for idx in range(indptr[r], indptr[r + 1]):
                    u = items[idx]
                    if mark[u] != base_stamp:
                        mark[u] = stamp
            s = perm[m_prime - 1]
            acc = 0.0
            for idx in range(indptr[s], indptr[s + 1]):
                u = items[idx]
                if mark[u] != base_stamp and mark[u] != stamp:
                    acc += w[u]
            if acc >= thr_eff:
                hits += 1
            for j in range(m_prime - 1, -1, -1):
                d = draws[t, j]
                perm[d] = undo[2 * j + 1]
                perm[j] = undo[2 * j]
        return hits
