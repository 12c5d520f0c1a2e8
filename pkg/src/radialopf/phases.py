"""Phases, ordered phase sets and phase-indexed blocks.

Every per-phase quantity (voltages, injections, impedances, the relaxation
matrices) is a :class:`PhaseBlock`: a complex vector or matrix whose rows and
columns are labelled by an ordered subset of ``{a, b, c}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Optional

import numpy as np


class Phase(IntEnum):
    a = 0
    b = 1
    c = 2

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class PhaseSet:
    """Nonempty subset of phases, always kept in ``a < b < c`` order."""

    phases: tuple

    def __init__(self, phases: Iterable):
        if isinstance(phases, str):
            try:
                items = [Phase[ch] for ch in phases.lower()]
            except KeyError as exc:
                raise ValueError(f"unknown phase in {phases!r}") from exc
        else:
            items = [Phase(p) if not isinstance(p, str) else Phase[p] for p in phases]
        if not items:
            raise ValueError("phase set must be nonempty")
        if len(set(items)) != len(items):
            raise ValueError(f"repeated phase in {phases!r}")
        object.__setattr__(self, "phases", tuple(sorted(items)))

    def __len__(self) -> int:
        return len(self.phases)

    def __iter__(self):
        return iter(self.phases)

    def __contains__(self, p) -> bool:
        return Phase(p) in self.phases

    def __le__(self, other: "PhaseSet") -> bool:
        return set(self.phases) <= set(other.phases)

    def __str__(self) -> str:
        return "".join(p.name for p in self.phases)

    def __repr__(self) -> str:
        return f"PhaseSet({str(self)!r})"

    def issubset(self, other: "PhaseSet") -> bool:
        return self <= other

    def positions_in(self, other: "PhaseSet") -> np.ndarray:
        """Indices of this set's phases inside ``other``."""
        if not self <= other:
            raise ValueError(f"{self} is not a subset of {other}")
        return np.array([other.phases.index(p) for p in self.phases], dtype=int)


ABC = PhaseSet("abc")

UNITS = ("volts_pu", "amps_pu", "power_pu", "impedance_pu", "dimensionless")


@dataclass(frozen=True)
class PhaseBlock:
    """A complex vector (``cols is None``) or matrix labelled by phases.

    Hermitian blocks are built from their upper triangle only, so the stored
    matrix equals its conjugate transpose exactly.
    """

    rows: PhaseSet
    cols: Optional[PhaseSet]
    data: np.ndarray
    unit: str = "dimensionless"
    hermitian: bool = False

    def __post_init__(self):
        if self.unit not in UNITS:
            raise ValueError(f"unknown unit {self.unit!r}")
        data = np.array(self.data, dtype=complex)
        if self.cols is None:
            if data.shape != (len(self.rows),):
                raise ValueError(f"vector over {self.rows} needs {len(self.rows)} entries")
            if self.hermitian:
                raise ValueError("vectors cannot be Hermitian")
        else:
            if data.shape != (len(self.rows), len(self.cols)):
                raise ValueError(
                    f"block over {self.rows}x{self.cols} has shape {data.shape}"
                )
            if self.hermitian:
                if self.rows != self.cols:
                    raise ValueError("Hermitian blocks need equal row/column phases")
                upper = np.triu(data, 1)
                data = upper + upper.conj().T + np.diag(data.diagonal().real)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def vector(cls, phases, values, unit="dimensionless") -> "PhaseBlock":
        ps = phases if isinstance(phases, PhaseSet) else PhaseSet(phases)
        return cls(ps, None, values, unit)

    @classmethod
    def matrix(cls, phases, values, unit="dimensionless", hermitian=False, cols=None) -> "PhaseBlock":
        ps = phases if isinstance(phases, PhaseSet) else PhaseSet(phases)
        cs = ps if cols is None else (cols if isinstance(cols, PhaseSet) else PhaseSet(cols))
        return cls(ps, cs, values, unit, hermitian)

    @property
    def is_vector(self) -> bool:
        return self.cols is None

    @property
    def shape(self):
        return self.data.shape

    def __array__(self, dtype=None, copy=None):
        return np.array(self.data, dtype=dtype)

    def entry(self, row, col=None):
        i = self.rows.phases.index(Phase(row) if not isinstance(row, str) else Phase[row])
        if self.cols is None:
            return self.data[i]
        j = self.cols.phases.index(Phase(col) if not isinstance(col, str) else Phase[col])
        return self.data[i, j]

    def __eq__(self, other):
        if not isinstance(other, PhaseBlock):
            return NotImplemented
        return (
            self.rows == other.rows and self.cols == other.cols and self.unit == other.unit
            and self.hermitian == other.hermitian and np.array_equal(self.data, other.data)
        )

    __hash__ = None


def phase_project(block: PhaseBlock, target) -> PhaseBlock:
    """Restrict ``block`` to the phases in ``target`` (rows and columns)."""
    target = target if isinstance(target, PhaseSet) else PhaseSet(target)
    ri = target.positions_in(block.rows)
    if block.cols is None:
        return PhaseBlock(target, None, block.data[ri], block.unit)
    ci = target.positions_in(block.cols)
    return PhaseBlock(target, target, block.data[np.ix_(ri, ci)], block.unit,
                      block.hermitian)


def phase_embed(block: PhaseBlock, target) -> PhaseBlock:
    """Extend ``block`` to ``target`` phases, filling new entries with zero."""
    target = target if isinstance(target, PhaseSet) else PhaseSet(target)
    ri = block.rows.positions_in(target)
    if block.cols is None:
        out = np.zeros(len(target), dtype=complex)
        out[ri] = block.data
        return PhaseBlock(target, None, out, block.unit)
    ci = block.cols.positions_in(target)
    out = np.zeros((len(target), len(target)), dtype=complex)
    out[np.ix_(ri, ci)] = block.data
    return PhaseBlock(target, target, out, block.unit, block.hermitian)
