# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: cyclic Jacobi eigensolver and one FBS sweep.

Mirrors ``_kernels_py`` exactly; the same arithmetic in the same order.
"""
import numpy as np
from libc.math cimport sqrt, fabs


def jacobi_eigh(a_in, double tol=1e-15, int max_sweeps=60):
    cdef double[:, ::1] a = np.array(a_in, dtype=np.float64, order="C")
    cdef Py_ssize_t n = a.shape[0]
    v_arr = np.eye(n)
    cdef double[:, ::1] v = v_arr
    cdef Py_ssize_t p, q, r
    cdef double off, scale = 0.0, apq, theta, t, c, s, xp, xq
    cdef int sweeps = 0
    for p in range(n):
        for q in range(n):
            scale += a[p, q] * a[p, q]
    scale = sqrt(scale)
    if scale == 0.0 or n == 1:
        return np.asarray(a).diagonal().copy(), v_arr, 0
    while sweeps < max_sweeps:
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if sqrt(2.0 * off) <= tol * scale:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for r in range(n):
                    xp = a[r, p]
                    xq = a[r, q]
                    a[r, p] = c * xp - s * xq
                    a[r, q] = s * xp + c * xq
                for r in range(n):
                    xp = a[p, r]
                    xq = a[q, r]
                    a[p, r] = c * xp - s * xq
                    a[q, r] = s * xp + c * xq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for r in range(n):
                    xp = v[r, p]
                    xq = v[r, q]
                    v[r, p] = c * xp - s * xq
                    v[r, q] = s * xp + c * xq
    return np.asarray(a).diagonal().copy(), v_arr, sweeps


def fbs_sweep(long[::1] frm, long[::1] to, double complex[:, :, ::1] z,
              unsigned char[:, ::1] lmask, unsigned char[:, ::1] bmask,
              double complex[:, ::1] s, double complex[:, ::1] V,
              double complex[:, ::1] I):
    cdef Py_ssize_t nb = V.shape[0], nl = frm.shape[0]
    cdef Py_ssize_t k, p, q, e, i, j
    cdef double complex x, new
    cdef double d, dmax = 0.0
    cdef double complex drop[3]
    J_arr = np.zeros((nb, 3), dtype=np.complex128)
    cdef double complex[:, ::1] J = J_arr
    for k in range(nb):
        for p in range(3):
            if bmask[k, p]:
                if V[k, p] == 0:
                    return -1.0
                x = s[k, p] / V[k, p]
                J[k, p] = -x.conjugate()
    for e in range(nl - 1, -1, -1):
        j = to[e]
        for p in range(3):
            if lmask[e, p]:
                I[e, p] = J[j, p]
                J[frm[e], p] = J[frm[e], p] + J[j, p]
            else:
                I[e, p] = 0
    for e in range(nl):
        i = frm[e]
        j = to[e]
        for p in range(3):
            drop[p] = 0
            for q in range(3):
                drop[p] = drop[p] + z[e, p, q] * I[e, q]
        for p in range(3):
            if lmask[e, p]:
                new = V[i, p] - drop[p]
                d = abs(new - V[j, p])
                if d > dmax:
                    dmax = d
                V[j, p] = new
    return dmax
