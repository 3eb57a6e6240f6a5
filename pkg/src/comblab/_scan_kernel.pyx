# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False, language_level=3
"""Batched smallest eigenvalue of ``sum_k coeffs[i, k] * basis[k]`` for small Hermitian matrices.

Each matrix is diagonalized in place by cyclic complex Jacobi rotations,
which for 4x4 blocks is far cheaper than a general LAPACK call and accurate
to a few ulps of the matrix norm.
"""

from cython.parallel cimport parallel, prange
from libc.math cimport sqrt, INFINITY
from libc.stdlib cimport malloc, free

DEF MAX_SWEEPS = 30


cdef double _min_eig_jacobi(double *ar, double *ai, int d) noexcept nogil:
    """Smallest eigenvalue of the Hermitian matrix ``ar + i ai`` (both destroyed).

    Real and imaginary parts are kept apart so the inner loop is plain
    floating point arithmetic.
    """
    cdef int sweep, p, q, r, rp, rq
    cdef double off, scale, g, tau, t, c, s, app, aqq, er, ei, xr, xi, yr, yi
    for sweep in range(MAX_SWEEPS):
        off = 0.0
        scale = 0.0
        for p in range(d):
            scale += ar[p * d + p] * ar[p * d + p]
            for q in range(p + 1, d):
                off += ar[p * d + q] * ar[p * d + q] + ai[p * d + q] * ai[p * d + q]
        if off <= 1e-26 * (scale + off):
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                g = sqrt(ar[p * d + q] * ar[p * d + q] + ai[p * d + q] * ai[p * d + q])
                if g == 0.0:
                    continue
                # phase of a_pq; column q is multiplied by its conjugate
                er = ar[p * d + q] / g
                ei = ai[p * d + q] / g
                app = ar[p * d + p]
                aqq = ar[q * d + q]
                tau = (aqq - app) / (2.0 * g)
                if tau >= 0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                ar[p * d + p] = app - t * g
                ar[q * d + q] = aqq + t * g
                ar[p * d + q] = 0.0
                ai[p * d + q] = 0.0
                ar[q * d + p] = 0.0
                ai[q * d + p] = 0.0
                for r in range(d):
                    if r == p or r == q:
                        continue
                    rp = r * d + p
                    rq = r * d + q
                    xr = ar[rp]
                    xi = ai[rp]
                    yr = ar[rq] * er + ai[rq] * ei
                    yi = ai[rq] * er - ar[rq] * ei
                    ar[rp] = c * xr - s * yr
                    ai[rp] = c * xi - s * yi
                    ar[rq] = s * xr + c * yr
                    ai[rq] = s * xi + c * yi
                    ar[p * d + r] = ar[rp]
                    ai[p * d + r] = -ai[rp]
                    ar[q * d + r] = ar[rq]
                    ai[q * d + r] = -ai[rq]
    t = INFINITY
    for p in range(d):
        if ar[p * d + p] < t:
            t = ar[p * d + p]
    return t


def min_eig_batch(double complex[:, :, ::1] basis not None,
                  double[:, ::1] coeffs not None,
                  double[::1] out_min not None,
                  double[::1] out_trace not None,
                  int threads=1):
    """Fill ``out_min[i]`` and ``out_trace[i]`` for every row of ``coeffs``.

    ``basis`` has shape ``(K, d, d)`` and every combination must be Hermitian.
    Rows are independent, so results do not depend on ``threads``.
    """
    cdef Py_ssize_t n = coeffs.shape[0]
    cdef int K = <int>coeffs.shape[1]
    cdef int d = <int>basis.shape[1]
    cdef Py_ssize_t i
    cdef int k, r, s
    cdef double tr, cf
    cdef double *ar
    cdef double *ai
    cdef double complex z
    if basis.shape[0] != K or basis.shape[2] != d:
        raise ValueError("basis must have shape (K, d, d) matching coeffs")
    if out_min.shape[0] != n or out_trace.shape[0] != n:
        raise ValueError("output arrays must have one entry per row")
    if threads < 1:
        threads = 1
    with nogil, parallel(num_threads=threads):
        ar = <double *>malloc(2 * d * d * sizeof(double))
        ai = ar + d * d
        for i in prange(n, schedule='static'):
            for r in range(d * d):
                ar[r] = 0.0
                ai[r] = 0.0
            for k in range(K):
                cf = coeffs[i, k]
                if cf != 0.0:
                    for r in range(d):
                        for s in range(d):
                            z = basis[k, r, s]
                            ar[r * d + s] = ar[r * d + s] + cf * z.real
                            ai[r * d + s] = ai[r * d + s] + cf * z.imag
            tr = 0.0
            for r in range(d):
                tr = tr + ar[r * d + r]
            out_trace[i] = tr
            out_min[i] = _min_eig_jacobi(ar, ai, d)
        free(ar)
