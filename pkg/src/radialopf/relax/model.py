"""A small modeling layer that turns complex affine matrix expressions over
real variables into a :class:`~radialopf.conic.ConicProgram`.

An :class:`Expr` of shape ``sh`` is ``const + coef @ x[vars]`` where ``coef``
has shape ``sh + (len(vars),)`` and may be complex.  Variables are allocated
by kind (free, nonnegative, second-order block, PSD block) and only get their
final position in the cone vector when :meth:`Model.compile` runs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..conic import ConeSpec, ConicProgram, Free, NonNeg, PsdRealSym, SecondOrder

SQRT2 = np.sqrt(2.0)


class Expr:
    __slots__ = ("vars", "coef", "const")
    __array_ufunc__ = None

    def __init__(self, vars, coef, const):
        self.vars = np.asarray(vars, dtype=np.int64)
        self.coef = np.asarray(coef, dtype=complex)
        self.const = np.asarray(const, dtype=complex)

    @classmethod
    def constant(cls, value):
        value = np.asarray(value, dtype=complex)
        return cls(np.zeros(0, np.int64), np.zeros(value.shape + (0,), complex), value)

    @property
    def shape(self):
        return self.const.shape

    def _lift(self, other):
        return other if isinstance(other, Expr) else Expr.constant(np.broadcast_to(other, self.shape))

    def __add__(self, other):
        o = self._lift(other)
        return Expr(np.concatenate([self.vars, o.vars]),
                    np.concatenate([self.coef, o.coef], axis=-1), self.const + o.const)

    __radd__ = __add__

    def __neg__(self):
        return Expr(self.vars, -self.coef, -self.const)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, a):
        """Elementwise product with a constant (broadcast over leading dims)."""
        a = np.asarray(a, dtype=complex)
        return Expr(self.vars, self.coef * a[..., None], self.const * a)

    __rmul__ = __mul__

    def __rmatmul__(self, C):
        C = np.asarray(C, dtype=complex)
        if self.const.ndim == 1:
            return Expr(self.vars, np.einsum("ij,jv->iv", C, self.coef), C @ self.const)
        return Expr(self.vars, np.einsum("ik,kjv->ijv", C, self.coef), C @ self.const)

    def __matmul__(self, C):
        C = np.asarray(C, dtype=complex)
        return Expr(self.vars, np.einsum("ikv,kj->ijv", self.coef, C), self.const @ C)

    @property
    def H(self):
        return Expr(self.vars, np.conj(self.coef).transpose(1, 0, 2), self.const.conj().T)

    def diag(self):
        return Expr(self.vars, np.einsum("iiv->iv", self.coef), np.diag(self.const))

    def __getitem__(self, idx):
        return Expr(self.vars, self.coef[idx], self.const[idx])

    def sub(self, rows, cols=None):
        cols = rows if cols is None else cols
        ix = np.ix_(rows, cols)
        return Expr(self.vars, self.coef[ix], self.const[ix])

    def embed(self, pos, size):
        """Vector expression placed at ``pos`` inside a zero vector of ``size``."""
        coef = np.zeros((size,) + self.coef.shape[1:], complex)
        const = np.zeros(size, complex)
        coef[pos] = self.coef
        const[pos] = self.const
        return Expr(self.vars, coef, const)

    def value(self, xmap):
        """Evaluate with ``xmap`` giving each variable's value by provisional id."""
        return self.const + self.coef @ xmap[self.vars]

    @staticmethod
    def block(rows):
        """Assemble a 2D block matrix from a nested list of 2D expressions."""
        vars_ = np.concatenate([e.vars for r in rows for e in r])
        nv = len(vars_)
        heights = [r[0].shape[0] for r in rows]
        widths = [e.shape[1] for e in rows[0]]
        coef = np.zeros((sum(heights), sum(widths), nv), complex)
        const = np.zeros((sum(heights), sum(widths)), complex)
        off = 0
        r0 = 0
        for r, h in zip(rows, heights):
            c0 = 0
            for e, w in zip(r, widths):
                k = len(e.vars)
                coef[r0:r0 + h, c0:c0 + w, off:off + k] = e.coef
                const[r0:r0 + h, c0:c0 + w] = e.const
                off += k
                c0 += w
            r0 += h
        return Expr(vars_, coef, const)


def hstack_vec(parts):
    """Concatenate 1D expressions."""
    vars_ = np.concatenate([p.vars for p in parts])
    n = sum(p.shape[0] for p in parts)
    coef = np.zeros((n, len(vars_)), complex)
    const = np.zeros(n, complex)
    r = c = 0
    for p in parts:
        k, nv = p.shape[0], len(p.vars)
        coef[r:r + k, c:c + nv] = p.coef
        const[r:r + k] = p.const
        r += k
        c += nv
    return Expr(vars_, coef, const)


@dataclass
class _Var:
    kind: str  # "free", "nonneg", "soc", "psd"
    group: int  # block index for soc/psd
    pos: int  # position within the block


class Model:
    def __init__(self):
        self._vars: list = []
        self._soc: list = []  # sizes
        self._psd: list = []  # sides
        self._rows: list = []  # (coef dict-free arrays): (vars, vals, rhs)
        self.c: dict = {}
        self.offset = 0.0

    # -- variables -----------------------------------------------------------
    def _new(self, kind, n, group=-1):
        start = len(self._vars)
        self._vars.extend(_Var(kind, group, p) for p in range(n))
        return np.arange(start, start + n, dtype=np.int64)

    def free(self, n) -> np.ndarray:
        return self._new("free", n)

    def nonneg(self, n) -> np.ndarray:
        return self._new("nonneg", n)

    def soc(self, n) -> np.ndarray:
        g = len(self._soc)
        self._soc.append(n)
        return self._new("soc", n, g)

    def psd(self, side) -> np.ndarray:
        g = len(self._psd)
        self._psd.append(side)
        return self._new("psd", side * (side + 1) // 2, g)

    @staticmethod
    def real_vector(ids) -> Expr:
        k = len(ids)
        return Expr(ids, np.eye(k), np.zeros(k))

    def complex_vector(self, k) -> Expr:
        ids = self.free(2 * k)
        coef = np.zeros((k, 2 * k), complex)
        coef[np.arange(k), np.arange(k)] = 1
        coef[np.arange(k), k + np.arange(k)] = 1j
        return Expr(ids, coef, np.zeros(k))

    def complex_matrix(self, r, c) -> Expr:
        ids = self.free(2 * r * c)
        coef = np.zeros((r, c, 2 * r * c), complex)
        for a in range(r):
            for b in range(c):
                t = a * c + b
                coef[a, b, t] = 1
                coef[a, b, r * c + t] = 1j
        return Expr(ids, coef, np.zeros((r, c)))

    def hermitian_matrix(self, k) -> Expr:
        ids = self.free(k * k)
        coef = np.zeros((k, k, k * k), complex)
        t = 0
        for a in range(k):
            coef[a, a, t] = 1
            t += 1
        for a in range(k):
            for b in range(a + 1, k):
                coef[a, b, t] = 1
                coef[b, a, t] = 1
                coef[a, b, t + 1] = 1j
                coef[b, a, t + 1] = -1j
                t += 2
        return Expr(ids, coef, np.zeros((k, k)))

    # -- constraints -----------------------------------------------------------
    def _add_real_row(self, vars_, vals, rhs):
        keep = vals != 0
        if not keep.any() and rhs == 0:
            return
        self._rows.append((vars_[keep], vals[keep], float(rhs)))

    def eq(self, e: Expr, rhs=0.0, hermitian=False, real_only=False):
        """``e == rhs`` elementwise, split into real and imaginary parts.

        ``hermitian`` keeps only the upper triangle (and the real diagonal) of
        a matrix expression known to be Hermitian.
        """
        rhs = np.broadcast_to(np.asarray(rhs, dtype=complex), e.shape)
        coef = e.coef.reshape(-1, len(e.vars))
        r = (rhs - e.const).reshape(-1)
        if hermitian:
            k = e.shape[0]
            iu, ju = np.triu_indices(k)
            sel = iu * k + ju
            diag = iu == ju
        else:
            sel = np.arange(coef.shape[0])
            diag = np.zeros(len(sel), bool)
        for t, d in zip(sel, diag):
            self._add_real_row(e.vars, coef[t].real, r[t].real)
            if not (d or real_only):
                self._add_real_row(e.vars, coef[t].imag, r[t].imag)

    def real_eq(self, e: Expr, rhs=0.0):
        self.eq(e, rhs, real_only=True)

    def psd_hermitian(self, M: Expr) -> np.ndarray:
        """Require Hermitian ``M`` to be PSD via its real embedding; returns
        the ids of the linked PSD cone variable."""
        k = M.shape[0]
        n = 2 * k
        X = self.psd(n)
        re = Expr(M.vars, M.coef.real, M.const.real)
        im = Expr(M.vars, M.coef.imag, M.const.imag)
        iu, ju = np.triu_indices(n)
        for t, (a, b) in enumerate(zip(iu, ju)):
            # E = [[Re, -Im], [Im, Re]]
            pa, pb = a % k, b % k
            src = re if (a < k) == (b < k) else im
            sign = 1.0
            if a < k <= b:
                sign = -1.0
            vals = sign * src.coef[pa, pb].real
            cst = sign * src.const[pa, pb].real
            f = 1.0 if a == b else SQRT2
            vars_ = np.concatenate([M.vars, [X[t]]])
            allv = np.concatenate([f * vals, [-1.0]])
            self._add_real_row(vars_, allv, -f * cst)
        return X

    def minimize(self, e: Expr):
        """Objective: real part of a scalar expression."""
        for v, cf in zip(e.vars, np.real(e.coef).reshape(-1)):
            if cf != 0:
                self.c[int(v)] = self.c.get(int(v), 0.0) + float(cf)
        self.offset += float(np.real(e.const))

    # -- compilation -------------------------------------------------------------
    def compile(self):
        """Return ``(ConicProgram, perm)`` where ``perm[id]`` is the final
        position of provisional variable ``id``."""
        kinds = [v.kind for v in self._vars]
        perm = np.empty(len(self._vars), dtype=np.int64)
        factors = []
        pos = 0
        free_ids = [i for i, k in enumerate(kinds) if k == "free"]
        nn_ids = [i for i, k in enumerate(kinds) if k == "nonneg"]
        if free_ids:
            perm[free_ids] = np.arange(pos, pos + len(free_ids))
            pos += len(free_ids)
            factors.append(Free(len(free_ids)))
        if nn_ids:
            perm[nn_ids] = np.arange(pos, pos + len(nn_ids))
            pos += len(nn_ids)
            factors.append(NonNeg(len(nn_ids)))
        groups: dict = {}
        for i, v in enumerate(self._vars):
            if v.kind in ("soc", "psd"):
                groups.setdefault((v.kind, v.group), []).append(i)
        for g, size in enumerate(self._soc):
            ids = groups[("soc", g)]
            perm[ids] = np.arange(pos, pos + size)
            pos += size
            factors.append(SecondOrder(size))
        for g, side in enumerate(self._psd):
            ids = groups[("psd", g)]
            perm[ids] = np.arange(pos, pos + len(ids))
            pos += len(ids)
            factors.append(PsdRealSym(side))
        n = pos
        rows, cols, vals, b = [], [], [], []
        for r, (vs, cf, rhs) in enumerate(self._rows):
            rows.append(np.full(len(vs), r))
            cols.append(perm[vs])
            vals.append(cf)
            b.append(rhs)
        m = len(b)
        if m:
            A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(m, n))
        else:
            A = sp.csr_matrix((0, n))
        c = np.zeros(n)
        for v, cf in self.c.items():
            c[perm[v]] += cf
        prog = ConicProgram(c, A, np.array(b, dtype=float), ConeSpec(factors))
        return prog, perm
