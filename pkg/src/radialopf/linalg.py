"""Small Hermitian matrix utilities.

Eigenproblems are solved by cyclic Jacobi on the real embedding
``[[Re m, -Im m], [Im m, Re m]]``; blocks here are at most 6x6 complex.
Functions accept a :class:`PhaseBlock` or a plain complex array.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import jacobi_eigh
from .phases import PhaseBlock

HERMITIAN_TOL = 1e-12
ZERO_NORM = 1e-14
PINV_CUTOFF = 1e-12


class RatioUndefined(ValueError):
    """Rank ratio requested for a (numerically) zero matrix."""


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # descending

    def __len__(self):
        return len(self.eigenvalues)


def _mat(m) -> np.ndarray:
    a = np.asarray(m.data if isinstance(m, PhaseBlock) else m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    return a


def _hermitian(m) -> np.ndarray:
    a = _mat(m)
    if np.abs(a - a.conj().T).max(initial=0.0) > HERMITIAN_TOL * max(1.0, np.abs(a).max(initial=0.0)):
        raise ValueError("matrix is not Hermitian")
    return a


def hermitian_to_real_embedding(m) -> np.ndarray:
    a = _hermitian(m)
    re, im = a.real, a.imag
    return np.block([[re, -im], [im, re]])


def hermitian_eigendecompose(m):
    """Return ``(Spectrum, U)`` with ``m = U diag(w) U^H`` and ``w`` descending."""
    a = _hermitian(m)
    k = a.shape[0]
    if k == 0:
        return Spectrum(np.zeros(0)), np.zeros((0, 0), complex)
    w2, v2, _ = jacobi_eigh(hermitian_to_real_embedding(a))
    # Every real eigenvector [x; y] gives a complex one x + jy, and the 2k of
    # them span C^k twice over.  Pick k by greedy Gram-Schmidt on max residual.
    cand = v2[:k, :] + 1j * v2[k:, :]
    order = np.argsort(-w2, kind="stable")
    cand = cand[:, order]
    chosen = np.zeros((k, k), complex)
    for r in range(k):
        res = cand - chosen[:, :r] @ (chosen[:, :r].conj().T @ cand)
        norms = np.linalg.norm(res, axis=0)
        best = int(np.argmax(norms))
        chosen[:, r] = res[:, best] / norms[best]
    vals = np.real(np.einsum("ij,ik,kj->j", chosen.conj(), a, chosen))
    idx = np.argsort(-vals, kind="stable")
    return Spectrum(vals[idx]), chosen[:, idx]


def eigenvalues(m) -> np.ndarray:
    return hermitian_eigendecompose(m)[0].eigenvalues


def rank_ratio(m) -> float:
    """``|l2|/|l1|`` over eigenvalue magnitudes; 0 for 1x1 matrices."""
    a = _hermitian(m)
    if np.linalg.norm(a) < ZERO_NORM:
        raise RatioUndefined("rank ratio undefined for a zero matrix")
    if a.shape[0] == 1:
        return 0.0
    mags = np.sort(np.abs(eigenvalues(a)))[::-1]
    return float(mags[1] / mags[0])


def psd_check(m, tol: float = 1e-9) -> bool:
    a = _hermitian(m)
    w = eigenvalues(a)
    return bool(w[-1] >= -tol * max(1.0, np.linalg.norm(a, 2)))


def pseudo_inverse(m, cutoff: float = PINV_CUTOFF) -> np.ndarray:
    a = _hermitian(m)
    spec, u = hermitian_eigendecompose(a)
    w = spec.eigenvalues
    if a.shape[0] == 0 or np.abs(w).max() == 0.0:
        return np.zeros_like(a)
    keep = np.abs(w) > cutoff * np.abs(w).max()
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    out = (u * inv) @ u.conj().T
    return (out + out.conj().T) / 2


def leading_rank1_factor(m) -> np.ndarray:
    """``sqrt(l1) u1`` with the first nonzero entry made real and nonnegative."""
    a = _hermitian(m)
    if np.linalg.norm(a) < ZERO_NORM:
        raise RatioUndefined("zero matrix has no leading factor")
    spec, u = hermitian_eigendecompose(a)
    x = np.sqrt(max(spec.eigenvalues[0], 0.0)) * u[:, 0]
    nz = np.flatnonzero(np.abs(x) > 1e-300)
    if nz.size:
        p = x[nz[0]]
        x = x * (np.conj(p) / abs(p))
        x[nz[0]] = abs(p)
    return x


__all__ = [
    "Spectrum", "RatioUndefined", "hermitian_eigendecompose", "eigenvalues", "rank_ratio",
    "psd_check", "pseudo_inverse", "leading_rank1_factor", "hermitian_to_real_embedding",
]
