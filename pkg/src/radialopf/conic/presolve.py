"""Row cleanup and Ruiz equilibration.

Column scaling has to keep every cone invariant, so second-order and PSD
blocks receive one scalar each; free and nonnegative coordinates are scaled
individually.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .cones import Free, NonNeg


@dataclass
class Presolved:
    A: sp.csr_matrix
    b: np.ndarray
    kept_rows: np.ndarray      # indices into the original rows
    inconsistent_row: int | None   # an all-zero row with b != 0, if any


def clean_rows(A: sp.csr_matrix, b: np.ndarray, tol: float = 0.0, rhs_tol: float = 0.0) -> Presolved:
    """Drop zero rows and exact duplicates (same row and same rhs).  A zero
    row is inconsistent only when ``|b_i| > rhs_tol``."""
    A = sp.csr_matrix(A)
    keep = []
    seen = {}
    bad = None
    for i in range(A.shape[0]):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        cols = A.indices[lo:hi]
        vals = A.data[lo:hi]
        nz = np.abs(vals) > tol
        if not nz.any():
            if abs(b[i]) > rhs_tol and bad is None:
                bad = i
            continue
        order = np.argsort(cols[nz])
        key = (cols[nz][order].tobytes(), vals[nz][order].tobytes(), float(b[i]))
        if key in seen:
            continue
        seen[key] = i
        keep.append(i)
    keep = np.array(keep, dtype=int)
    return Presolved(A[keep], b[keep], keep, bad)


def ruiz(A: sp.csr_matrix, cone, sweeps: int = 10, tol: float = 1e-2):
    """Return row and column scalings ``(d, e)`` so that ``diag(d) A diag(e)``
    has rows and columns of roughly unit infinity norm."""
    m, n = A.shape
    d = np.ones(m)
    e = np.ones(n)
    if m == 0 or A.nnz == 0:
        return d, e
    groups = []
    for f, sl in cone.slices():
        if not isinstance(f, (Free, NonNeg)):
            groups.append(sl)
    M = sp.csr_matrix(abs(A))
    for _ in range(sweeps):
        S = sp.diags(d) @ M @ sp.diags(e)
        rn = np.asarray(S.max(axis=1).todense()).ravel()
        cn = np.asarray(S.max(axis=0).todense()).ravel()
        for sl in groups:
            cn[sl] = cn[sl].max()
        rn[rn == 0] = 1.0
        cn[cn == 0] = 1.0
        if max(np.abs(1 - rn).max(), np.abs(1 - cn).max()) < tol:
            break
        d /= np.sqrt(rn)
        e /= np.sqrt(cn)
    return d, e
