# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernels; same contracts as ``_numpy``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, INFINITY, isfinite

cnp.import_array()

GAUSSIAN = 0
TRIANGULAR = 1


def catsel_sums(const int[:, ::1] codes, const double[:, ::1] weights,
                const long long[::1] rows, const long long[::1] attrs):
    # queries sharing a row are processed as one run: the mismatch list of
    # each row pair is built once and reused for every target attribute
    cdef Py_ssize_t n = codes.shape[0], p = codes.shape[1], m = rows.shape[0]
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    mism_arr = np.empty(p, dtype=np.intp)
    cdef Py_ssize_t[::1] mism = mism_arr
    cdef Py_ssize_t a, b, t, j, l, i, s, nm, h
    cdef int ci, cj, cnt
    cdef double acc
    with nogil:
        a = 0
        while a < m:
            i = rows[a]
            b = a + 1
            while b < m and rows[b] == i:
                b += 1
            for j in range(n):
                cnt = 0
                nm = 0
                if j != i:
                    for l in range(p):
                        ci = codes[i, l]
                        cj = codes[j, l]
                        if ci >= 0 and cj >= 0:
                            cnt += 1
                            if ci != cj:
                                mism[nm] = l
                                nm += 1
                for t in range(a, b):
                    s = attrs[t]
                    if cnt == 0 or codes[j, s] < 0:
                        out[t, j] = INFINITY
                        continue
                    acc = 0.0
                    for h in range(nm):
                        acc += weights[s, mism[h]]
                    out[t, j] = 2.0 * acc / cnt
            a = b
    return out_arr


def dummy_sums(const double[:, ::1] dummies, const long long[::1] col_attr,
               const int[:, ::1] codes, const double[:, ::1] weights,
               const long long[::1] rows, const long long[::1] attrs):
    cdef Py_ssize_t n = dummies.shape[0], D = dummies.shape[1], p = codes.shape[1]
    cdef Py_ssize_t m = rows.shape[0]
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    diff_arr = np.empty(D, dtype=np.intp)
    mag_arr = np.empty(D, dtype=np.float64)
    cdef Py_ssize_t[::1] diff = diff_arr
    cdef double[::1] mag = mag_arr
    cdef Py_ssize_t a, b, t, j, f, l, i, s, nd, h
    cdef int cnt
    cdef double acc, d
    with nogil:
        a = 0
        while a < m:
            i = rows[a]
            b = a + 1
            while b < m and rows[b] == i:
                b += 1
            for j in range(n):
                cnt = 0
                nd = 0
                if j != i:
                    for l in range(p):
                        if codes[i, l] >= 0 and codes[j, l] >= 0:
                            cnt += 1
                    for f in range(D):
                        l = col_attr[f]
                        if codes[i, l] >= 0 and codes[j, l] >= 0:
                            d = dummies[i, f] - dummies[j, f]
                            if d != 0.0:
                                diff[nd] = f
                                mag[nd] = d if d > 0 else -d
                                nd += 1
                for t in range(a, b):
                    s = attrs[t]
                    if cnt == 0 or codes[j, s] < 0:
                        out[t, j] = INFINITY
                        continue
                    acc = 0.0
                    for h in range(nd):
                        acc += weights[t, diff[h]] * mag[h]
                    out[t, j] = acc / cnt
            a = b
    return out_arr


def kernel_vote(const double[:, ::1] dist, const int[:, ::1] values,
                const long long[::1] cols, int n_classes, double lam, int kernel):
    cdef Py_ssize_t m = dist.shape[0], n = dist.shape[1]
    probs_arr = np.zeros((m, n_classes), dtype=np.float64)
    cdef double[:, ::1] probs = probs_arr
    cdef Py_ssize_t t, j, c
    cdef double dmin, umin, u, k, tot
    cdef int lab
    with nogil:
        for t in range(m):
            dmin = INFINITY
            for j in range(n):
                if dist[t, j] < dmin:
                    dmin = dist[t, j]
            if not isfinite(dmin):
                continue
            umin = dmin / lam
            tot = 0.0
            for j in range(n):
                if not isfinite(dist[t, j]):
                    continue
                u = dist[t, j] / lam
                if kernel == 0:
                    k = 0.5 * (u - umin) * (u + umin)
                    # exp underflows to exactly 0 past this point
                    k = exp(-k) if k < 746.0 else 0.0
                else:
                    k = 1.0 - u
                    if k < 0.0:
                        k = 0.0
                lab = values[j, cols[t]]
                if k > 0.0 and lab >= 0:
                    probs[t, lab] += k
                tot += k
            if tot <= 0.0:
                for j in range(n):
                    if dist[t, j] == dmin:
                        lab = values[j, cols[t]]
                        if lab >= 0:
                            probs[t, lab] += 1.0
                        tot += 1.0
            for c in range(n_classes):
                probs[t, c] /= tot
    return probs_arr
