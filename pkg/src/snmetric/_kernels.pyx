# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_kernels_py`` for the reference semantics.

``gram`` must be symmetric and C-contiguous; rows are read in place of
columns to keep the inner loops on contiguous memory.
"""

import numpy as np


cdef inline double _term(const double[:, ::1] g, const double[::1] q,
                         Py_ssize_t a, Py_ssize_t r, Py_ssize_t b,
                         double n_len, bint sn2) noexcept nogil:
    cdef double m1 = <double>(r - a)
    cdef double m2 = <double>(b - r)
    cdef double gaa = g[a, a]
    cdef double grr = g[r, r]
    cdef double gbb = g[b, b]
    cdef double gar = g[a, r]
    cdef double grb = g[b, r]
    cdef double gab = g[a, b]
    cdef double n1 = grr - 2.0 * gar + gaa
    cdef double n2 = gbb - 2.0 * grb + grr
    cdef double v1 = (q[r] - q[a]) / m1 - n1 / (m1 * m1)
    cdef double v2 = (q[b] - q[r]) / m2 - n2 / (m2 * m2)
    cdef double wt = m1 * m2 / (n_len * <double>(b - a))
    cdef double t = wt * (v1 - v2)
    cdef double out = t * t
    cdef double md, tc
    if sn2:
        md = n1 / (m1 * m1) + n2 / (m2 * m2) - 2.0 * (grb - grr - gab + gar) / (m1 * m2)
        if md < 0.0:
            md = 0.0
        tc = 2.0 * wt * md
        out += tc * tc
    return out


cdef void _curve(const double[:, ::1] g, const double[::1] q,
                 Py_ssize_t start, Py_ssize_t stop,
                 Py_ssize_t k_lo, Py_ssize_t k_hi, Py_ssize_t h, bint sn2,
                 double[::1] values, unsigned char[::1] degenerate) noexcept nogil:
    cdef Py_ssize_t L = stop - start
    cdef double n_len = <double>L
    cdef Py_ssize_t k, l, i
    cdef double num, den
    for k in range(k_lo, k_hi + 1):
        i = k - k_lo
        num = n_len * _term(g, q, start, start + k, stop, n_len, sn2)
        den = 0.0
        for l in range(h, k - h + 1):
            den += _term(g, q, start, start + l, start + k, n_len, sn2)
        for l in range(k + h, L - h + 1):
            den += _term(g, q, start + k, start + l, stop, n_len, sn2)
        if den > 0.0:
            values[i] = num / den
            degenerate[i] = 0
        else:
            values[i] = 0.0
            degenerate[i] = 1


def cp_curve(gram, q, Py_ssize_t start, Py_ssize_t stop,
             Py_ssize_t k_lo, Py_ssize_t k_hi, Py_ssize_t h, bint sn2):
    cdef const double[:, ::1] g = np.ascontiguousarray(gram, dtype=np.float64)
    cdef const double[::1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef Py_ssize_t nk = k_hi - k_lo + 1
    values = np.zeros(nk, dtype=np.float64)
    deg = np.zeros(nk, dtype=np.uint8)
    cdef double[::1] vv = values
    cdef unsigned char[::1] dd = deg
    with nogil:
        _curve(g, qq, start, stop, k_lo, k_hi, h, sn2, vv, dd)
    return values, deg.astype(bool)


def interval_maxima(gram, q, starts, stops, k_los, k_his, hs, bint sn2):
    cdef const double[:, ::1] g = np.ascontiguousarray(gram, dtype=np.float64)
    cdef const double[::1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef const long long[::1] s = np.ascontiguousarray(starts, dtype=np.int64)
    cdef const long long[::1] e = np.ascontiguousarray(stops, dtype=np.int64)
    cdef const long long[::1] klo = np.ascontiguousarray(k_los, dtype=np.int64)
    cdef const long long[::1] khi = np.ascontiguousarray(k_his, dtype=np.int64)
    cdef const long long[::1] hh = np.ascontiguousarray(hs, dtype=np.int64)
    cdef Py_ssize_t m = s.shape[0]
    best = np.zeros(m, dtype=np.float64)
    arg = np.zeros(m, dtype=np.int64)
    alldeg = np.zeros(m, dtype=np.uint8)
    cdef double[::1] bb = best
    cdef long long[::1] aa = arg
    cdef unsigned char[::1] ad = alldeg
    cdef Py_ssize_t maxk = 0
    cdef Py_ssize_t i, j, nk
    for i in range(m):
        if khi[i] - klo[i] + 1 > maxk:
            maxk = khi[i] - klo[i] + 1
    vals_buf = np.zeros(max(maxk, 1), dtype=np.float64)
    deg_buf = np.zeros(max(maxk, 1), dtype=np.uint8)
    cdef double[::1] vv = vals_buf
    cdef unsigned char[::1] dd = deg_buf
    cdef double cur
    cdef bint all_deg
    with nogil:
        for i in range(m):
            nk = khi[i] - klo[i] + 1
            _curve(g, qq, s[i], e[i], klo[i], khi[i], hh[i], sn2, vv, dd)
            cur = vv[0]
            aa[i] = klo[i]
            all_deg = dd[0]
            for j in range(1, nk):
                if vv[j] > cur:
                    cur = vv[j]
                    aa[i] = klo[i] + j
                if not dd[j]:
                    all_deg = False
            bb[i] = cur
            ad[i] = all_deg
    return best, arg, alldeg.astype(bool)


def kahan_cumsum(x):
    arr = np.ascontiguousarray(x, dtype=np.float64)
    shape = arr.shape
    cdef const double[:, ::1] xv = arr.reshape(shape[0], -1)
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t d = xv.shape[1]
    out = np.zeros((n + 1, d), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j
    cdef double s, c, y, t
    with nogil:
        for j in range(d):
            s = 0.0
            c = 0.0
            for i in range(n):
                y = xv[i, j] - c
                t = s + y
                c = (t - s) - y
                s = t
                ov[i + 1, j] = s
    return out.reshape((n + 1,) + shape[1:])
