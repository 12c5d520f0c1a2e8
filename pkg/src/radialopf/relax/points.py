"""Points of the two relaxations, their constraint residuals, the bijection
between them, rank-one recovery of voltages, and exactness diagnostics.

A BIM point holds ``W[k] = W_ij`` for line ``k = (i, j)`` oriented away from
the substation; ``W_ji`` is always ``W_ij^H`` and is never stored.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..linalg import RatioUndefined, eigenvalues, leading_rank1_factor, rank_ratio
from ..network import Network
from ..powerflow import line_from_pos

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 1e-6


class NotExact(ValueError):
    """Recovery refused: some line block is not numerically rank one."""


@dataclass
class BimSdpPoint:
    s: list
    v: list
    W: list


@dataclass
class BfmSdpPoint:
    s: list
    v: list
    S: list
    l: list


@dataclass
class ExactnessReport:
    ratios: list  # per line, None where the block is zero
    max_ratio: float
    exact: bool
    threshold: float
    undefined: list = field(default_factory=list)


def _vref_outer(net):
    vr = net.buses[0].v_ref
    return np.outer(vr, vr.conj())


def line_block(net: Network, pt, k: int) -> np.ndarray:
    """The 2|phases| Hermitian matrix whose rank-one-ness the relaxation drops."""
    ln = net.lines[k]
    pos = line_from_pos(net, k)
    vi = pt.v[ln.from_bus][np.ix_(pos, pos)]
    if isinstance(pt, BimSdpPoint):
        off, low = pt.W[k], pt.v[ln.to_bus]
    else:
        off, low = pt.S[k], pt.l[k]
    return np.block([[vi, off], [off.conj().T, low]])


def exactness_report(pt, net: Network, threshold: float = DEFAULT_THRESHOLD) -> ExactnessReport:
    ratios, undefined = [], []
    for k in range(len(net.lines)):
        M = line_block(net, pt, k)
        M = (M + M.conj().T) / 2
        try:
            ratios.append(rank_ratio(M))
        except RatioUndefined:
            ratios.append(None)
            undefined.append(k)
    if undefined:
        warnings.warn(f"rank ratio undefined for zero blocks on lines {undefined}", RuntimeWarning)
    defined = [r for r in ratios if r is not None]
    mx = max(defined, default=0.0)
    return ExactnessReport(ratios, mx, mx <= threshold, threshold, undefined)


# -- constraint residuals -----------------------------------------------------------

def _bounds_violation(net, v):
    out = []
    for b in net.buses:
        d = np.real(np.diag(v[b.id]))
        if b.is_substation:
            out.append(np.zeros_like(d))
            continue
        out.append(np.maximum(np.maximum(b.vmin ** 2 - d, d - b.vmax ** 2), 0.0))
    return out


def _psd_violation(M):
    M = (M + M.conj().T) / 2
    lam = eigenvalues(M)
    return max(0.0, -float(lam[-1])) / max(1.0, float(np.abs(lam).max(initial=0.0)))


def bim_residuals(net: Network, pt: BimSdpPoint) -> dict:
    """Every BIM-SDP constraint family except device membership, as arrays
    whose entries are zero exactly when the constraint holds."""
    bal = [np.array(x, dtype=complex) for x in pt.s]
    for k, ln in enumerate(net.lines):
        i, j = ln.from_bus, ln.to_bus
        pos = line_from_pos(net, k)
        y = ln.y
        W = pt.W[k]
        bal[i][pos] -= np.diag((pt.v[i][np.ix_(pos, pos)] - W) @ y.conj().T)
        bal[j] -= np.diag((pt.v[j] - W.conj().T) @ y.conj().T)
    return {
        "balance": bal,
        "v0": [pt.v[0] - _vref_outer(net)],
        "bounds": _bounds_violation(net, pt.v),
        "hermitian": [v - v.conj().T for v in pt.v],
        "psd": [np.array([_psd_violation(line_block(net, pt, k))]) for k in range(len(net.lines))],
    }


def bfm_residuals(net: Network, pt: BfmSdpPoint) -> dict:
    bal = [np.array(x, dtype=complex) for x in pt.s]
    volt = []
    for k, ln in enumerate(net.lines):
        i, j = ln.from_bus, ln.to_bus
        pos = line_from_pos(net, k)
        z, S, L = ln.z, pt.S[k], pt.l[k]
        bal[j] += np.diag(S - z @ L)
        bal[i][pos] -= np.diag(S)
        Sz = S @ z.conj().T
        volt.append(pt.v[j] - (pt.v[i][np.ix_(pos, pos)] - (Sz + Sz.conj().T) + z @ L @ z.conj().T))
    return {
        "balance": bal,
        "v0": [pt.v[0] - _vref_outer(net)],
        "bounds": _bounds_violation(net, pt.v),
        "voltage": volt,
        "hermitian": [v - v.conj().T for v in pt.v] + [L - L.conj().T for L in pt.l],
        "psd": [np.array([_psd_violation(line_block(net, pt, k))]) for k in range(len(net.lines))],
    }


def max_residual(res: dict) -> float:
    return max((float(np.abs(a).max(initial=0.0)) for v in res.values() for a in v), default=0.0)


# -- the bijection -----------------------------------------------------------------

def map_f(pt: BimSdpPoint, net: Network) -> BfmSdpPoint:
    """``S = (v_i - W_ij) y^H`` and ``l = y (v_i - W_ji - W_ij + v_j) y^H``."""
    S, L = [], []
    for k, ln in enumerate(net.lines):
        pos = line_from_pos(net, k)
        vi = pt.v[ln.from_bus][np.ix_(pos, pos)]
        W = pt.W[k]
        y = ln.y
        S.append((vi - W) @ y.conj().T)
        L.append(y @ (vi - W.conj().T - W + pt.v[ln.to_bus]) @ y.conj().T)
    return BfmSdpPoint([x.copy() for x in pt.s], [x.copy() for x in pt.v], S, L)


def map_g(pt: BfmSdpPoint, net: Network) -> BimSdpPoint:
    """``W_ij = v_i - S z^H``."""
    W = []
    for k, ln in enumerate(net.lines):
        pos = line_from_pos(net, k)
        W.append(pt.v[ln.from_bus][np.ix_(pos, pos)] - pt.S[k] @ ln.z.conj().T)
    return BimSdpPoint([x.copy() for x in pt.s], [x.copy() for x in pt.v], W)


# -- recovery ----------------------------------------------------------------------

@dataclass
class Recovered:
    V: list
    I: list | None = None
    approximate: bool = False
    report: ExactnessReport | None = None


def _gate(pt, net, threshold, force):
    rep = exactness_report(pt, net, threshold)
    if not rep.exact and not force:
        raise NotExact(f"max rank ratio {rep.max_ratio:.3e} exceeds threshold {threshold:g}")
    return rep


def _rank1_parts(net, pt, k):
    """Leading rank-one approximation of line ``k``'s block, split as (a, b)."""
    M = line_block(net, pt, k)
    u = leading_rank1_factor((M + M.conj().T) / 2)
    n = len(net.lines[k].phases)
    return u[:n], u[n:]


def recover_voltages_alg1(pt: BimSdpPoint, net: Network, threshold: float = DEFAULT_THRESHOLD,
                          force: bool = False) -> Recovered:
    """Walk the tree from the substation with ``V_j = W_ji V_i / tr(v_i)``."""
    rep = _gate(pt, net, threshold, force)
    approx = not rep.exact
    V = [None] * len(net.buses)
    V[0] = np.array(net.buses[0].v_ref, dtype=complex)
    for k, ln in enumerate(net.lines):
        pos = line_from_pos(net, k)
        vi = V[ln.from_bus][pos]
        if approx:
            a, b = _rank1_parts(net, pt, k)
            Wji = np.outer(b, a.conj())
            tr = float(np.vdot(a, a).real)
        else:
            Wji = pt.W[k].conj().T
            tr = float(np.trace(pt.v[ln.from_bus][np.ix_(pos, pos)]).real)
        if tr == 0.0:
            raise ZeroDivisionError(f"zero trace at bus {ln.from_bus}")
        V[ln.to_bus] = Wji @ vi / tr
    return Recovered(V, None, approx, rep)


def recover_voltages_alg2(pt: BfmSdpPoint, net: Network, threshold: float = DEFAULT_THRESHOLD,
                          force: bool = False) -> Recovered:
    """``I_ij = S^H V_i / tr(v_i)`` then ``V_j = V_i - z I_ij``."""
    rep = _gate(pt, net, threshold, force)
    approx = not rep.exact
    V = [None] * len(net.buses)
    I = [None] * len(net.lines)
    V[0] = np.array(net.buses[0].v_ref, dtype=complex)
    for k, ln in enumerate(net.lines):
        pos = line_from_pos(net, k)
        vi = V[ln.from_bus][pos]
        if approx:
            a, b = _rank1_parts(net, pt, k)
            Sk = np.outer(a, b.conj())
            tr = float(np.vdot(a, a).real)
        else:
            Sk = pt.S[k]
            tr = float(np.trace(pt.v[ln.from_bus][np.ix_(pos, pos)]).real)
        if tr == 0.0:
            raise ZeroDivisionError(f"zero trace at bus {ln.from_bus}")
        I[k] = Sk.conj().T @ vi / tr
        V[ln.to_bus] = vi - ln.z @ I[k]
    return Recovered(V, I, approx, rep)


# -- forward construction ------------------------------------------------------------

def bim_point_from_voltages(net: Network, V) -> BimSdpPoint:
    """Rank-one BIM point with ``v = V V^H``, ``W_ij = V_i V_j^H`` and ``s`` from
    the bus injection model."""
    from ..powerflow import bfm_from_voltages

    st = bfm_from_voltages(net, V)
    v = [np.outer(x, x.conj()) for x in V]
    W = []
    for k, ln in enumerate(net.lines):
        pos = line_from_pos(net, k)
        W.append(np.outer(V[ln.from_bus][pos], V[ln.to_bus].conj()))
    return BimSdpPoint(st.s, v, W)


def bfm_point_from_voltages(net: Network, V) -> BfmSdpPoint:
    from ..powerflow import bfm_from_voltages

    st = bfm_from_voltages(net, V)
    return BfmSdpPoint(st.s, [np.outer(x, x.conj()) for x in V], st.S, st.l)


def bfm_point_from_state(st) -> BfmSdpPoint:
    return BfmSdpPoint([x.copy() for x in st.s], [np.outer(x, x.conj()) for x in st.V],
                       [x.copy() for x in st.S], [x.copy() for x in st.l])


def combine(points, weights):
    """Convex combination of points of the same kind (stays feasible)."""
    p0 = points[0]
    names = ("s", "v", "W") if isinstance(p0, BimSdpPoint) else ("s", "v", "S", "l")
    parts = {}
    for nm in names:
        parts[nm] = [sum(w * getattr(p, nm)[t] for p, w in zip(points, weights))
                     for t in range(len(getattr(p0, nm)))]
    return type(p0)(**parts)


def point_max_diff(a, b) -> float:
    names = ("s", "v", "W") if isinstance(a, BimSdpPoint) else ("s", "v", "S", "l")
    return max(float(np.abs(x - y).max(initial=0.0))
               for nm in names for x, y in zip(getattr(a, nm), getattr(b, nm)))
