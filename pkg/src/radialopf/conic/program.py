"""Conic program container and its plain-text triplet dump format.

The program is

    minimize    c^T x
    subject to  A x = b,  x in K = K_1 x ... x K_m

Dump format (one record per line, ``#`` starts a comment)::

    conic-program 1
    dims <n> <m>            # variables, equality rows
    cones F3 L2 Q3 S2       # cone factors in vector order
    c <j> <value>           # nonzero objective entries
    A <i> <j> <value>       # nonzero constraint entries, row major
    b <i> <value>           # nonzero right-hand-side entries

Indices are zero based and values use ``repr`` so a dump reloads bit-exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .cones import ConeSpec, parse_cone_code


@dataclass(frozen=True)
class ConicProgram:
    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    cone: ConeSpec

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        b = np.asarray(self.b, dtype=float)
        A = sp.csr_matrix(self.A, dtype=float)
        A.sum_duplicates()
        A.eliminate_zeros()
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "A", A)
        n = self.cone.dim
        if c.shape != (n,):
            raise ValueError(f"objective has {c.shape} entries, cone has dim {n}")
        if A.shape != (len(b), n):
            raise ValueError(f"A is {A.shape}, expected {(len(b), n)}")

    @property
    def n(self) -> int:
        return self.cone.dim

    @property
    def m(self) -> int:
        return len(self.b)

    def triplets(self):
        """Row-major ``(row, col, value)`` triplets of ``A``."""
        coo = self.A.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]

    def dumps(self) -> str:
        out = ["conic-program 1", f"dims {self.n} {self.m}", f"cones {self.cone}"]
        out += [f"c {j} {float(self.c[j])!r}" for j in np.flatnonzero(self.c)]
        out += [f"A {i} {j} {float(v)!r}" for i, j, v in zip(*self.triplets())]
        out += [f"b {i} {float(self.b[i])!r}" for i in np.flatnonzero(self.b)]
        return "\n".join(out) + "\n"

    def dump(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "ConicProgram":
        n = m = None
        cone = None
        c_items, a_rows, a_cols, a_vals, b_items = [], [], [], [], []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tag, *rest = line.split()
            if tag == "conic-program":
                if rest != ["1"]:
                    raise ValueError(f"unsupported dump version {rest}")
            elif tag == "dims":
                n, m = int(rest[0]), int(rest[1])
            elif tag == "cones":
                cone = ConeSpec(parse_cone_code(code) for code in rest)
            elif tag == "c":
                c_items.append((int(rest[0]), float(rest[1])))
            elif tag == "A":
                a_rows.append(int(rest[0]))
                a_cols.append(int(rest[1]))
                a_vals.append(float(rest[2]))
            elif tag == "b":
                b_items.append((int(rest[0]), float(rest[1])))
            else:
                raise ValueError(f"unknown record {tag!r}")
        if n is None or cone is None:
            raise ValueError("dump lacks dims/cones header")
        c = np.zeros(n)
        for j, v in c_items:
            c[j] = v
        b = np.zeros(m)
        for i, v in b_items:
            b[i] = v
        A = sp.csr_matrix((a_vals, (a_rows, a_cols)), shape=(m, n))
        return cls(c, A, b, cone)

    @classmethod
    def load(cls, path) -> "ConicProgram":
        return cls.loads(Path(path).read_text())
