# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the numeric kernels.

Mirrors :mod:`tholdout._core_py` (same contracts, C loops instead of numpy
vectorization).  The two backends agree to floating-point noise.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, fabs, log, sqrt

cnp.import_array()

IS_COMPILED = True
LOG_SATURATION = 1e300

cdef double _LOG_SAT = 1e300
cdef double _SQRT_2PI = 2.5066282746310002


cdef Py_ssize_t _merge_edges(const double[::1] b1, const double[::1] b2, double[::1] out) nogil:
    """Sorted unique merge of two sorted edge arrays into ``out``; returns count."""
    cdef Py_ssize_t i = 0, j = 0, k = 0
    cdef Py_ssize_t n1 = b1.shape[0], n2 = b2.shape[0]
    cdef double v
    while i < n1 or j < n2:
        if j >= n2 or (i < n1 and b1[i] <= b2[j]):
            v = b1[i]
            i += 1
        else:
            v = b2[j]
            j += 1
        if k == 0 or v > out[k - 1]:
            out[k] = v
            k += 1
    return k


def hist_hellinger_sq(const double[::1] b1, const double[::1] m1,
                      const double[::1] b2, const double[::1] m2):
    """Exact squared Hellinger distance between two histograms (merged grid)."""
    cdef Py_ssize_t n1 = b1.shape[0], n2 = b2.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] buf = np.empty(n1 + n2)
    cdef double[::1] e = buf
    cdef Py_ssize_t ne, k, i = 0, j = 0
    cdef double lo, hi, p, q, bc = 0.0
    with nogil:
        ne = _merge_edges(b1, b2, e)
        for k in range(ne - 1):
            lo = e[k]
            hi = e[k + 1]
            while i < n1 - 2 and b1[i + 1] <= lo:
                i += 1
            while j < n2 - 2 and b2[j + 1] <= lo:
                j += 1
            p = 0.0
            q = 0.0
            if b1[i] <= lo and hi <= b1[i + 1]:
                p = m1[i] * (hi - lo) / (b1[i + 1] - b1[i])
            if b2[j] <= lo and hi <= b2[j + 1]:
                q = m2[j] * (hi - lo) / (b2[j + 1] - b2[j])
            bc += sqrt(p * q)
    if bc > 1.0:
        return 0.0
    return 1.0 - bc


def hist_lq(const double[::1] b1, const double[::1] m1,
            const double[::1] b2, const double[::1] m2, int q):
    """Exact ``||f - g||_q^q`` (q in {1,2}) between two histograms."""
    cdef Py_ssize_t n1 = b1.shape[0], n2 = b2.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] buf = np.empty(n1 + n2)
    cdef double[::1] e = buf
    cdef Py_ssize_t ne, k, i = 0, j = 0
    cdef double lo, hi, hp, hq, d, w, acc = 0.0
    with nogil:
        ne = _merge_edges(b1, b2, e)
        for k in range(ne - 1):
            lo = e[k]
            hi = e[k + 1]
            while i < n1 - 2 and b1[i + 1] <= lo:
                i += 1
            while j < n2 - 2 and b2[j + 1] <= lo:
                j += 1
            w = hi - lo
            hp = 0.0
            hq = 0.0
            if b1[i] <= lo and hi <= b1[i + 1]:
                hp = m1[i] / (b1[i + 1] - b1[i])
            if b2[j] <= lo and hi <= b2[j + 1]:
                hq = m2[j] / (b2[j + 1] - b2[j])
            d = fabs(hp - hq)
            if q == 1:
                acc += d * w
            else:
                acc += d * d * w
    return acc


cdef inline Py_ssize_t _lower_bound(const double[::1] a, double v) nogil:
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


def gauss_kde_pdf(const double[::1] centers, double h, object x):
    """Gaussian kernel density at points x (centers sorted ascending).

    Centers beyond 38.7 bandwidths contribute exp() values that underflow to
    zero, so the inner sum is restricted to the window around each point.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xa = \
        np.ascontiguousarray(np.asarray(x, dtype=np.float64).ravel())
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(xa.shape[0])
    cdef double[::1] xv = xa
    cdef double[::1] ov = out
    cdef Py_ssize_t n = centers.shape[0], m = xa.shape[0]
    cdef Py_ssize_t k, i, lo, hi
    cdef double z, acc, cut = 38.7 * h
    cdef double scale = 1.0 / (n * h * _SQRT_2PI)
    with nogil:
        for k in range(m):
            acc = 0.0
            lo = _lower_bound(centers, xv[k] - cut)
            hi = _lower_bound(centers, xv[k] + cut)
            for i in range(lo, hi):
                z = (xv[k] - centers[i]) / h
                acc += exp(-0.5 * z * z)
            ov[k] = acc * scale
    return out.reshape(np.shape(x))


def dp_partition(const double[:, ::1] cell_ll, int dmax):
    """Best-partition dynamic program; see the fallback for the contract."""
    cdef Py_ssize_t n_edges = cell_ll.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] best = \
        np.full((dmax + 1, n_edges), -np.inf)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] back = \
        np.zeros((dmax + 1, n_edges), dtype=np.int64)
    cdef double[:, ::1] bv = best
    cdef cnp.int64_t[:, ::1] kv = back
    cdef Py_ssize_t d, e, j, arg
    cdef double cand, top
    bv[0, 0] = 0.0
    with nogil:
        for d in range(1, dmax + 1):
            for e in range(n_edges):
                top = -INFINITY
                arg = 0
                for j in range(e):
                    cand = bv[d - 1, j] + cell_ll[j, e]
                    if cand > top:
                        top = cand
                        arg = j
                bv[d, e] = top
                kv[d, e] = arg
    return best, back


def birge_sum(const double[::1] sq_i, const double[::1] sq_j, double w_i, double w_j):
    """Saturating sum of log-ratio terms; see the fallback for the contract."""
    cdef Py_ssize_t k, n = sq_i.shape[0]
    cdef double num, den, acc = 0.0
    for k in range(n):
        num = w_i * sq_i[k] + w_j * sq_j[k]
        den = w_i * sq_j[k] + w_j * sq_i[k]
        if num > 0.0 and den > 0.0:
            acc += log(num) - log(den)
        elif num > 0.0:
            acc += _LOG_SAT
        elif den > 0.0:
            acc -= _LOG_SAT
    return acc


def baraud_sum(const double[::1] sq_i, const double[::1] sq_j, const double[::1] sq_r):
    """Sum of ``(sq_j - sq_i)/sq_r`` with zero-midpoint terms contributing 0."""
    cdef Py_ssize_t k, n = sq_i.shape[0]
    cdef double acc = 0.0
    for k in range(n):
        if sq_r[k] > 0.0:
            acc += (sq_j[k] - sq_i[k]) / sq_r[k]
    return acc
