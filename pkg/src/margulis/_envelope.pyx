# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled lower-envelope scan.

For each radius r, finds the smallest k minimizing w_k(r)^2 = c[k] r^2 + k^2.
Since w_k^2 >= k^2, the scan stops once k^2 reaches the running minimum.
"""

cimport cython
from libc.math cimport INFINITY


def envelope_many(const double[::1] c, const double[::1] radii,
                  double[::1] out_w2, long long[::1] out_k):
    """Fill out_w2/out_k; return 0, or the first k past the end of ``c`` still needed."""
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t i, k
    cdef double r2, best, w2, kf
    cdef long long best_k
    with nogil:
        for i in range(radii.shape[0]):
            r2 = radii[i] * radii[i]
            best = INFINITY
            best_k = 0
            k = 1
            while True:
                kf = <double>k
                if kf * kf >= best:
                    break
                if k >= n:
                    with gil:
                        return k
                w2 = c[k] * r2 + kf * kf
                if w2 < best:
                    best = w2
                    best_k = k
                k += 1
            out_w2[i] = best
            out_k[i] = best_k
    return 0
