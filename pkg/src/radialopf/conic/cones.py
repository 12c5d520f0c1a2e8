"""Cone factors and the per-cone arithmetic used by the interior-point solver.

Vectors live in the concatenation of the factors.  PSD factors use the
scaled lower/upper-triangle vectorization ``svec`` (upper triangle, row
major, off-diagonals multiplied by sqrt(2)) so that the Euclidean inner
product of two svec vectors equals the trace inner product of the matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from scipy import linalg as sla

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class Free:
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("Free cone needs dim >= 1")

    @property
    def size(self) -> int:
        return self.dim

    @property
    def code(self) -> str:
        return f"F{self.dim}"


@dataclass(frozen=True)
class NonNeg:
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("NonNeg cone needs dim >= 1")

    @property
    def size(self) -> int:
        return self.dim

    @property
    def code(self) -> str:
        return f"L{self.dim}"


@dataclass(frozen=True)
class SecondOrder:
    """``{(t, u) : t >= ||u||}`` with ``t`` stored first."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("SecondOrder cone needs dim >= 1")

    @property
    def size(self) -> int:
        return self.dim

    @property
    def code(self) -> str:
        return f"Q{self.dim}"


@dataclass(frozen=True)
class PsdRealSym:
    side: int

    def __post_init__(self):
        if self.side < 1:
            raise ValueError("PSD cone needs side >= 1")

    @property
    def size(self) -> int:
        return self.side * (self.side + 1) // 2

    @property
    def code(self) -> str:
        return f"S{self.side}"


ConeFactor = Union[Free, NonNeg, SecondOrder, PsdRealSym]


def parse_cone_code(code: str) -> ConeFactor:
    kind, n = code[0], int(code[1:])
    return {"F": Free, "L": NonNeg, "Q": SecondOrder, "S": PsdRealSym}[kind](n)


@dataclass(frozen=True)
class ConeSpec:
    factors: tuple

    def __init__(self, factors):
        object.__setattr__(self, "factors", tuple(factors))

    @property
    def dim(self) -> int:
        return sum(f.size for f in self.factors)

    def offsets(self) -> list[int]:
        out, k = [], 0
        for f in self.factors:
            out.append(k)
            k += f.size
        return out

    def slices(self):
        """Yield ``(factor, slice)`` pairs in vector order."""
        for f, off in zip(self.factors, self.offsets()):
            yield f, slice(off, off + f.size)

    def degree(self) -> int:
        deg = 0
        for f in self.factors:
            if isinstance(f, NonNeg):
                deg += f.dim
            elif isinstance(f, SecondOrder):
                deg += 1
            elif isinstance(f, PsdRealSym):
                deg += f.side
        return deg

    def __str__(self) -> str:
        return " ".join(f.code for f in self.factors)


# --------------------------------------------------------------------------
# svec / smat


@lru_cache(maxsize=None)
def _triu(side: int):
    return np.triu_indices(side)


@lru_cache(maxsize=None)
def svec_matrix(side: int) -> np.ndarray:
    """Matrix ``S`` with ``svec(M) = S @ vec(M)`` for symmetric ``M``.

    Rows are orthonormal, so ``smat(v) = (S.T @ v).reshape(side, side)``.
    """
    iu, ju = _triu(side)
    S = np.zeros((len(iu), side * side))
    for r, (i, j) in enumerate(zip(iu, ju)):
        if i == j:
            S[r, i * side + j] = 1.0
        else:
            S[r, i * side + j] = S[r, j * side + i] = 1.0 / SQRT2
    S.setflags(write=False)
    return S


def svec(M: np.ndarray) -> np.ndarray:
    side = M.shape[0]
    iu, ju = _triu(side)
    v = M[iu, ju].astype(float, copy=True)
    v[iu != ju] *= SQRT2
    return v


def smat(v: np.ndarray, side: int) -> np.ndarray:
    iu, ju = _triu(side)
    M = np.zeros((side, side))
    off = iu != ju
    vals = np.array(v, dtype=float)
    vals[off] /= SQRT2
    M[iu, ju] = vals
    M[ju, iu] = vals
    return M


def side_from_size(size: int) -> int:
    side = int(round((np.sqrt(8 * size + 1) - 1) / 2))
    if side * (side + 1) // 2 != size:
        raise ValueError(f"{size} is not a triangular number")
    return side


# --------------------------------------------------------------------------
# numeric cone blocks used inside the solver


class ScalingError(ArithmeticError):
    """The iterate left the cone interior, so no scaling point exists."""


class _Block:
    """Common interface; ``sl`` is the slice of the block inside x."""

    degree = 0

    def __init__(self, sl: slice):
        self.sl = sl
        self.n = sl.stop - sl.start


class NonNegBlock(_Block):
    def __init__(self, sl):
        super().__init__(sl)
        self.degree = self.n

    def identity(self):
        return np.ones(self.n)

    def margin(self, u):
        return float(u.min())

    def max_step(self, u, du):
        neg = du < 0
        if not neg.any():
            return np.inf
        return float(np.min(-u[neg] / du[neg]))

    def scale(self, s, z):
        if s.min() <= 0 or z.min() <= 0:
            raise ScalingError("nonnegative iterate not interior")
        return _NonNegScaling(s, z)

    @staticmethod
    def product(u, v):
        return u * v


class _NonNegScaling:
    def __init__(self, s, z):
        self.d = np.sqrt(s / z)
        self.lam = np.sqrt(s * z)

    def W(self, u):
        return u * self.d

    def Winv(self, u):
        return u / self.d

    # W is diagonal, so W^T = W
    WinvT = Winv

    def H(self):
        return np.diag(self.d ** -2)

    def lam_sq(self):
        return self.lam ** 2

    def lam_div(self, r):
        return r / self.lam


class SocBlock(_Block):
    def __init__(self, sl):
        super().__init__(sl)
        self.degree = 1
        self.J = np.ones(self.n)
        self.J[1:] = -1.0

    def identity(self):
        e = np.zeros(self.n)
        e[0] = 1.0
        return e

    def margin(self, u):
        return float(u[0] - np.linalg.norm(u[1:]))

    def max_step(self, u, du):
        # first positive root of (u0 + a d0)^2 - ||u1 + a d1||^2 = 0
        a = du[0] ** 2 - du[1:] @ du[1:]
        b = 2.0 * (u[0] * du[0] - u[1:] @ du[1:])
        c = u[0] ** 2 - u[1:] @ u[1:]
        if c <= 0:
            return 0.0
        roots = []
        if abs(a) < 1e-300:
            if b < 0:
                roots.append(-c / b)
        else:
            disc = b * b - 4 * a * c
            if disc >= 0:
                sq = np.sqrt(disc)
                q = -0.5 * (b + np.copysign(sq, b))
                for r in (q / a, c / q if q != 0 else np.inf):
                    if r > 0:
                        roots.append(r)
        # the direction may also drive t negative through the apex
        if du[0] < 0:
            roots.append(-u[0] / du[0])
        return float(min(roots)) if roots else np.inf

    def scale(self, s, z):
        return _SocScaling(s, z, self.J)

    @staticmethod
    def product(u, v):
        out = np.empty_like(u)
        out[0] = u @ v
        out[1:] = u[0] * v[1:] + v[0] * u[1:]
        return out


class _SocScaling:
    def __init__(self, s, z, J):
        sn = s[0] ** 2 - s[1:] @ s[1:]
        zn = z[0] ** 2 - z[1:] @ z[1:]
        if s[0] <= 0 or z[0] <= 0 or sn <= 0 or zn <= 0:
            raise ScalingError("second-order iterate not interior")
        sn, zn = np.sqrt(sn), np.sqrt(zn)
        sb, zb = s / sn, z / zn
        gamma = np.sqrt((1.0 + sb @ zb) / 2.0)
        w = (sb + J * zb) / (2.0 * gamma)
        n = len(s)
        Wb = np.empty((n, n))
        Wb[0, 0] = w[0]
        Wb[0, 1:] = Wb[1:, 0] = w[1:]
        Wb[1:, 1:] = np.eye(n - 1) + np.outer(w[1:], w[1:]) / (1.0 + w[0])
        self.beta = np.sqrt(sn / zn)
        self.Wm = self.beta * Wb
        self.Wm_inv = (J[:, None] * Wb * J[None, :]) / self.beta
        self.lam = self.Wm @ z

    def W(self, u):
        return self.Wm @ u

    def Winv(self, u):
        return self.Wm_inv @ u

    WinvT = Winv

    def H(self):
        return self.Wm_inv @ self.Wm_inv

    def lam_sq(self):
        return SocBlock.product(self.lam, self.lam)

    def lam_div(self, r):
        lam = self.lam
        det = lam[0] ** 2 - lam[1:] @ lam[1:]
        x = np.empty_like(r)
        x[0] = (lam[0] * r[0] - lam[1:] @ r[1:]) / det
        x[1:] = (r[1:] - x[0] * lam[1:]) / lam[0]
        return x


class PsdBlock(_Block):
    def __init__(self, sl, side):
        super().__init__(sl)
        self.side = side
        self.degree = side

    def identity(self):
        return svec(np.eye(self.side))

    def margin(self, u):
        M = smat(u, self.side)
        return float(np.linalg.eigvalsh(M)[0])

    def max_step(self, u, du):
        X = smat(u, self.side)
        D = smat(du, self.side)
        try:
            L = np.linalg.cholesky(X)
        except np.linalg.LinAlgError:
            return 0.0
        Li = sla.solve_triangular(L, np.eye(self.side), lower=True)
        M = Li @ D @ Li.T
        lmin = np.linalg.eigvalsh((M + M.T) / 2)[0]
        return np.inf if lmin >= 0 else float(-1.0 / lmin)

    def scale(self, s, z):
        return _PsdScaling(smat(s, self.side), smat(z, self.side))

    def product(self, u, v):
        U, V = smat(u, self.side), smat(v, self.side)
        return svec((U @ V + V @ U) / 2.0)


class _PsdScaling:
    """Nesterov-Todd scaling ``R`` with ``R^T Z R = R^-1 S R^-T = diag(lam)``."""

    def __init__(self, S, Z):
        try:
            Ls = np.linalg.cholesky(S)
            Lz = np.linalg.cholesky(Z)
        except np.linalg.LinAlgError as exc:
            raise ScalingError("PSD iterate not interior") from exc
        U, sig, Vt = np.linalg.svd(Lz.T @ Ls)
        if sig.min() <= 0:
            raise ScalingError("degenerate PSD scaling")
        self.side = S.shape[0]
        self.sig = sig
        self.R = Ls @ Vt.T / np.sqrt(sig)[None, :]
        self.Rinv = (np.sqrt(sig)[:, None] * Vt) @ sla.solve_triangular(
            Ls, np.eye(self.side), lower=True
        )
        self.lam = svec(np.diag(sig))

    def W(self, u):
        M = smat(u, self.side)
        return svec(self.R.T @ M @ self.R)

    def Winv(self, u):
        M = smat(u, self.side)
        return svec(self.Rinv.T @ M @ self.Rinv)

    def WinvT(self, u):
        M = smat(u, self.side)
        return svec(self.Rinv @ M @ self.Rinv.T)

    def H(self):
        P = self.Rinv.T @ self.Rinv
        S = svec_matrix(self.side)
        return S @ np.kron(P, P) @ S.T

    def lam_sq(self):
        return svec(np.diag(self.sig ** 2))

    def lam_div(self, r):
        M = smat(r, self.side)
        denom = (self.sig[:, None] + self.sig[None, :]) / 2.0
        return svec(M / denom)


def make_block(factor: ConeFactor, sl: slice):
    if isinstance(factor, NonNeg):
        return NonNegBlock(sl)
    if isinstance(factor, SecondOrder):
        return SocBlock(sl)
    if isinstance(factor, PsdRealSym):
        return PsdBlock(sl, factor.side)
    raise TypeError(f"no numeric block for {factor!r}")


def membership_margin(factor: ConeFactor, u: np.ndarray) -> float:
    """Signed distance-like margin: >= 0 iff ``u`` lies in the cone.

    NonNeg: min entry; SOC: ``t - ||u||``; PSD: smallest eigenvalue.
    Free factors always return +inf.
    """
    if isinstance(factor, Free):
        return np.inf
    return make_block(factor, slice(0, len(u))).margin(u)
