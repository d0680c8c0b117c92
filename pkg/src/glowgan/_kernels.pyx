# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_kernels_py``; identical signatures."""

import numpy as np
from libc.math cimport exp, fabs, log, pow

cdef double LN2_HALF = 0.5 * log(2.0)


def camera_forward(const double[:, ::1] r, const double[::1] factor,
                   const double[::1] beta, const double[::1] gamma):
    cdef Py_ssize_t B = r.shape[0], N = r.shape[1], b, i
    out = np.empty((B, N), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double f, be, ga, x, xg
    with nogil:
        for b in range(B):
            f = factor[b]
            be = beta[b]
            ga = gamma[b]
            for i in range(N):
                x = r[b, i] * f
                if x >= 1.0:
                    o[b, i] = 1.0
                elif x <= 0.0:
                    o[b, i] = 0.0
                else:
                    # exp/log is several times faster than libm pow here
                    xg = exp(ga * log(x))
                    o[b, i] = (1.0 + be) * xg / (be + xg)
    return out


def camera_vjp(const double[:, ::1] r, const double[::1] factor,
               const double[::1] beta, const double[::1] gamma,
               const double[:, ::1] grad_out):
    cdef Py_ssize_t B = r.shape[0], N = r.shape[1], b, i
    grad_r = np.zeros((B, N), dtype=np.float64)
    grad_e = np.zeros(B, dtype=np.float64)
    cdef double[:, ::1] gr = grad_r
    cdef double[::1] ge = grad_e
    cdef double f, be, ga, x, xg, d, slope, gx, acc
    with nogil:
        for b in range(B):
            f = factor[b]
            be = beta[b]
            ga = gamma[b]
            acc = 0.0
            for i in range(N):
                x = r[b, i] * f
                if x > 1.0 or x <= 0.0:
                    continue
                xg = exp(ga * log(x))
                d = be + xg
                slope = (1.0 + be) * ga * (xg / x) * be / (d * d)
                gx = grad_out[b, i] * slope
                gr[b, i] = gx * f
                acc += gx * x
            ge[b] = acc * LN2_HALF
    return grad_r, grad_e


def soft_mask(const double[:, :, ::1] ldr, double tau):
    cdef Py_ssize_t H = ldr.shape[0], W = ldr.shape[1], C = ldr.shape[2], y, x, c
    out = np.empty((H, W), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double peak
    with nogil:
        for y in range(H):
            for x in range(W):
                peak = ldr[y, x, 0]
                for c in range(1, C):
                    if ldr[y, x, c] > peak:
                        peak = ldr[y, x, c]
                o[y, x] = (peak - tau) / (1.0 - tau) if peak > tau else 0.0
    return out


def merge_stack(const double[:, ::1] ldr, const double[::1] factor,
                double beta, double gamma, double sat_level):
    cdef Py_ssize_t K = ldr.shape[0], N = ldr.shape[1], k, i, kmin = 0
    out = np.empty(N, dtype=np.float64)
    cdef double[::1] o = out
    cdef double l, lin, w, wsum, acc, inv_gamma = 1.0 / gamma
    for k in range(1, K):
        if factor[k] < factor[kmin]:
            kmin = k
    with nogil:
        for i in range(N):
            wsum = 0.0
            acc = 0.0
            for k in range(K):
                l = ldr[k, i]
                if l >= sat_level:
                    continue
                lin = pow(l * beta / (beta + (1.0 - l)), inv_gamma)
                w = 1.0 - fabs(2.0 * l - 1.0)
                if w < 0.01:
                    w = 0.01
                wsum += w
                acc += w * lin / factor[k]
            if wsum > 0.0:
                o[i] = acc / wsum
            else:
                l = ldr[kmin, i]
                o[i] = pow(l * beta / (beta + (1.0 - l)), inv_gamma) / factor[kmin]
    return out
