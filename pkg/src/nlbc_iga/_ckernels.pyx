# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels (see ``_kernels_py`` for contracts)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def find_spans(knots, int degree, x):
    cdef const double[::1] U = np.ascontiguousarray(knots, dtype=np.float64)
    cdef const double[::1] xs = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    cdef Py_ssize_t n = U.shape[0] - degree - 1
    cdef Py_ssize_t last = n - 1
    cdef Py_ssize_t k, lo, hi, mid
    cdef double v
    while U[last] == U[last + 1]:
        last -= 1
    out = np.empty(xs.shape[0], dtype=np.intp)
    cdef Py_ssize_t[::1] spans = out
    for k in range(xs.shape[0]):
        v = xs[k]
        if v >= U[last + 1]:
            spans[k] = last
            continue
        if v <= U[degree]:
            spans[k] = degree
            continue
        lo = degree
        hi = last + 1
        # invariant: U[lo] <= v < U[hi]
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if v < U[mid]:
                hi = mid
            else:
                lo = mid
        spans[k] = lo
    return out


def basis_funs_ders(knots, int degree, spans, x):
    cdef const double[::1] U = np.ascontiguousarray(knots, dtype=np.float64)
    cdef const double[::1] xs = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    cdef const Py_ssize_t[::1] sp = np.ascontiguousarray(np.atleast_1d(spans), dtype=np.intp)
    cdef int p = degree
    cdef Py_ssize_t npts = xs.shape[0]
    out_arr = np.zeros((npts, 2, p + 1))
    cdef double[:, :, ::1] out = out_arr
    cdef double[::1] left = np.zeros(p + 1)
    cdef double[::1] right = np.zeros(p + 1)
    cdef double[::1] vals = np.zeros(p + 1)
    cdef double[::1] lower = np.zeros(p + 1)
    cdef Py_ssize_t k, j, r, s, i
    cdef double u, saved, temp, denom, d
    for k in range(npts):
        u = xs[k]
        s = sp[k]
        vals[0] = 1.0
        lower[0] = 1.0
        for j in range(1, p + 1):
            left[j] = u - U[s + 1 - j]
            right[j] = U[s + j] - u
            if j == p:
                for r in range(p):
                    lower[r] = vals[r]
            saved = 0.0
            for r in range(j):
                denom = right[r + 1] + left[j - r]
                if denom == 0.0:
                    temp = 0.0
                else:
                    temp = vals[r] / denom
                vals[r] = saved + right[r + 1] * temp
                saved = left[j - r] * temp
            vals[j] = saved
        for j in range(p + 1):
            out[k, 0, j] = vals[j]
        if p > 0:
            for j in range(p + 1):
                i = s - p + j
                d = 0.0
                if j > 0:
                    denom = U[i + p] - U[i]
                    if denom != 0.0:
                        d += lower[j - 1] / denom
                if j < p:
                    denom = U[i + p + 1] - U[i + 1]
                    if denom != 0.0:
                        d -= lower[j] / denom
                out[k, 1, j] = p * d
    return out_arr


def accumulate_bilinear(K, rows, cols, left, right, weights):
    cdef double[:, ::1] Km = K
    cdef const Py_ssize_t[:, ::1] R = np.ascontiguousarray(rows, dtype=np.intp)
    cdef const Py_ssize_t[:, ::1] C = np.ascontiguousarray(cols, dtype=np.intp)
    cdef const double[:, :, :, ::1] L = np.ascontiguousarray(left, dtype=np.float64)
    cdef const double[:, :, :, ::1] Rt = np.ascontiguousarray(right, dtype=np.float64)
    cdef const double[:, ::1] W = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t ne = L.shape[0], nq = L.shape[1]
    cdef Py_ssize_t na = L.shape[2], nb = Rt.shape[2], nc = L.shape[3]
    cdef Py_ssize_t e, q, a, b, c
    cdef double acc, wq, la
    local_arr = np.zeros((na, nb))
    cdef double[:, ::1] local = local_arr
    for e in range(ne):
        for a in range(na):
            for b in range(nb):
                local[a, b] = 0.0
        for q in range(nq):
            wq = W[e, q]
            for a in range(na):
                for c in range(nc):
                    la = wq * L[e, q, a, c]
                    for b in range(nb):
                        local[a, b] += la * Rt[e, q, b, c]
        for a in range(na):
            for b in range(nb):
                Km[R[e, a], C[e, b]] += local[a, b]
    return K
