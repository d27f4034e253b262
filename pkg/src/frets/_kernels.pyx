# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled radix-2 FFT kernel; same contract as ``frets._kernels_py.fft_pow2``."""
import numpy as np

from frets._kernels_py import bit_reverse, twiddles


cdef void _butterfly_rows(double* rp, double* ip, double* rq, double* iq,
                          double wr, double wi, Py_ssize_t inner) noexcept nogil:
    cdef Py_ssize_t j
    cdef double ar, ai, br, bi, tr, ti
    for j in range(inner):
        ar = rp[j]
        ai = ip[j]
        br = rq[j]
        bi = iq[j]
        tr = br * wr - bi * wi
        ti = br * wi + bi * wr
        rq[j] = ar - tr
        iq[j] = ai - ti
        rp[j] = ar + tr
        ip[j] = ai + ti


def fft_pow2(re, im, bint inverse=False):
    cdef Py_ssize_t outer = re.shape[0]
    cdef Py_ssize_t n = re.shape[1]
    cdef Py_ssize_t inner = re.shape[2]
    cdef const double[:, :, :] src_r = np.asarray(re, dtype=np.float64)
    cdef const double[:, :, :] src_i = np.asarray(im, dtype=np.float64)
    cdef const Py_ssize_t[::1] perm = bit_reverse(n)
    out_re = np.empty((outer, n, inner))
    out_im = np.empty((outer, n, inner))
    tw_re_arr, tw_im_arr = twiddles(n)
    cdef double[:, :, ::1] r = out_re
    cdef double[:, :, ::1] i = out_im
    cdef const double[::1] tw_re = tw_re_arr
    cdef const double[::1] tw_im = tw_im_arr
    cdef double sign = 1.0 if inverse else -1.0
    cdef Py_ssize_t o, size, half, step, start, k, p, q, j
    if outer == 0 or inner == 0:
        return out_re, out_im
    with nogil:
        for o in range(outer):
            for k in range(n):
                p = perm[k]
                for j in range(inner):
                    r[o, k, j] = src_r[o, p, j]
                    i[o, k, j] = src_i[o, p, j]
            size = 2
            while size <= n:
                half = size >> 1
                step = n // size
                start = 0
                while start < n:
                    for k in range(half):
                        p = start + k
                        q = p + half
                        _butterfly_rows(&r[o, p, 0], &i[o, p, 0], &r[o, q, 0], &i[o, q, 0],
                                        tw_re[k * step], sign * tw_im[k * step], inner)
                    start += size
                size <<= 1
    return out_re, out_im
