"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Both modules expose the same functions with the same argument layout; see
:mod:`radialopf.kernels` for how one is picked.
"""
import math

import numpy as np


def jacobi_eigh(a, tol=1e-15, max_sweeps=60):
    """Cyclic Jacobi on a real symmetric matrix.

    Returns ``(w, V, sweeps)`` with unsorted eigenvalues ``w`` and eigenvectors
    in the columns of ``V``.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = math.sqrt(float(np.sum(a * a)))
    if scale == 0.0 or n == 1:
        return a.diagonal().copy(), v, 0
    sweeps = 0
    while sweeps < max_sweeps:
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if math.sqrt(2.0 * off) <= tol * scale:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q]
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :]
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return a.diagonal().copy(), v, sweeps


def fbs_sweep(frm, to, z, lmask, bmask, s, V, I):
    """One backward/forward sweep on zero-padded 3-phase arrays.

    ``V`` (buses x 3) and ``I`` (lines x 3) are updated in place.  Returns the
    largest voltage change, or -1.0 if a live phase has zero voltage.
    """
    nb = V.shape[0]
    nl = frm.shape[0]
    J = np.zeros((nb, 3), dtype=complex)
    for k in range(nb):
        for p in range(3):
            if bmask[k, p]:
                if V[k, p] == 0:
                    return -1.0
                J[k, p] = -(s[k, p] / V[k, p]).conjugate()
    for e in range(nl - 1, -1, -1):
        j = to[e]
        for p in range(3):
            if lmask[e, p]:
                I[e, p] = J[j, p]
                J[frm[e], p] += J[j, p]
            else:
                I[e, p] = 0
    dmax = 0.0
    for e in range(nl):
        i, j = frm[e], to[e]
        drop = z[e] @ I[e]
        for p in range(3):
            if lmask[e, p]:
                new = V[i, p] - drop[p]
                d = abs(new - V[j, p])
                if d > dmax:
                    dmax = d
                V[j, p] = new
    return dmax
