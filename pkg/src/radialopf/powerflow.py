"""Exact radial power flow: model residuals and a forward-backward sweep.

Profiles are plain lists indexed by bus id (voltages, injections) or by line
position in ``net.lines`` (currents, flows), each entry a complex array over
the bus or line phases.  Injections are net generation (loads negative).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .kernels import fbs_sweep
from .network import Network

log = logging.getLogger(__name__)


class PowerFlowError(RuntimeError):
    pass


class FbsNotConverged(PowerFlowError):
    def __init__(self, msg, state=None, change=None):
        super().__init__(msg)
        self.state = state
        self.change = change


@dataclass
class BranchFlowState:
    V: list
    I: list
    s: list
    S: list
    l: list
    iterations: int = 0
    converged: bool = True
    change: float = 0.0
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)


def line_from_pos(net: Network, k: int) -> np.ndarray:
    """Positions of line ``k``'s phases inside its upstream bus's phases."""
    return _from_pos(net)[k]


@lru_cache(maxsize=64)
def _from_pos(net: Network):
    return tuple(ln.phases.positions_in(net.buses[ln.from_bus].phases) for ln in net.lines)


def flat_profile(net: Network) -> list:
    """Substation reference projected onto every bus's phases."""
    b0 = net.buses[0]
    out = [np.array(b0.v_ref, dtype=complex)]
    for b in net.buses[1:]:
        out.append(np.array(b0.v_ref[b.phases.positions_in(b0.phases)], dtype=complex))
    return out


def _check_profile(net, V, what="V"):
    if len(V) != len(net.buses):
        raise ValueError(f"{what} has {len(V)} entries for {len(net.buses)} buses")
    for b, v in zip(net.buses, V):
        if np.shape(v) != (len(b.phases),):
            raise ValueError(f"{what}[{b.id}] does not match phases {b.phases}")


def bim_residual(net: Network, V, s) -> list:
    """Per-bus ``s_i - sum_j diag(V_i (V_i - V_j)^H y^H)`` embedded on bus phases."""
    _check_profile(net, V)
    _check_profile(net, s, "s")
    res = [np.array(si, dtype=complex) for si in s]
    for k, ln in enumerate(net.lines):
        i, j = ln.from_bus, ln.to_bus
        pos = line_from_pos(net, k)
        vi, vj = V[i][pos], V[j]
        y = ln.y
        res[i][pos] -= vi * np.conj(y @ (vi - vj))
        res[j] -= vj * np.conj(y @ (vj - vi))
    return res


def bfm_from_voltages(net: Network, V) -> BranchFlowState:
    """Currents by Ohm's law, ``l = I I^H``, ``S = V_i I^H`` and ``s`` from the
    bus balance, so the BFM residuals vanish by construction."""
    _check_profile(net, V)
    V = [np.array(v, dtype=complex) for v in V]
    s = [np.zeros(len(b.phases), complex) for b in net.buses]
    I, S, L = [], [], []
    for k, ln in enumerate(net.lines):
        i, j = ln.from_bus, ln.to_bus
        pos = line_from_pos(net, k)
        cur = ln.y @ (V[i][pos] - V[j])
        Sk = np.outer(V[i][pos], cur.conj())
        Lk = np.outer(cur, cur.conj())
        I.append(cur)
        S.append(Sk)
        L.append(Lk)
        s[i][pos] += np.diag(Sk)
        s[j] -= np.diag(Sk - ln.z @ Lk)
    return BranchFlowState(V, I, s, S, L)


def bfm_residual(net: Network, st: BranchFlowState) -> dict:
    """Residual families ``ohm``, ``slack_l``, ``slack_S`` (per line) and
    ``balance`` (per bus)."""
    ohm, rl, rS = [], [], []
    bal = [np.array(si, dtype=complex) for si in st.s]
    for k, ln in enumerate(net.lines):
        i, j = ln.from_bus, ln.to_bus
        pos = line_from_pos(net, k)
        vi = st.V[i][pos]
        cur = st.I[k]
        ohm.append(vi - st.V[j] - ln.z @ cur)
        rl.append(st.l[k] - np.outer(cur, cur.conj()))
        rS.append(st.S[k] - np.outer(vi, cur.conj()))
        bal[j] += np.diag(st.S[k] - ln.z @ st.l[k])
        bal[i][pos] -= np.diag(st.S[k])
    return {"ohm": ohm, "slack_l": rl, "slack_S": rS, "balance": bal}


def max_abs(parts) -> float:
    """Largest entry magnitude over a list (or dict of lists) of arrays."""
    if isinstance(parts, dict):
        return max((max_abs(v) for v in parts.values()), default=0.0)
    return max((float(np.abs(p).max(initial=0.0)) for p in parts), default=0.0)


@lru_cache(maxsize=64)
def _padded(net: Network):
    nb, nl = len(net.buses), len(net.lines)
    frm = np.array([ln.from_bus for ln in net.lines], dtype=np.int64)
    to = np.array([ln.to_bus for ln in net.lines], dtype=np.int64)
    z = np.zeros((nl, 3, 3), complex)
    lmask = np.zeros((nl, 3), np.uint8)
    bmask = np.zeros((nb, 3), np.uint8)
    for k, ln in enumerate(net.lines):
        g = np.array([int(p) for p in ln.phases])
        z[k][np.ix_(g, g)] = ln.z
        lmask[k, g] = 1
    for b in net.buses:
        bmask[b.id, [int(p) for p in b.phases]] = 1
    return frm, to, z, lmask, bmask


def _pad(net, prof):
    out = np.zeros((len(net.buses), 3), complex)
    for b, v in zip(net.buses, prof):
        out[b.id, [int(p) for p in b.phases]] = v
    return out


def _unpad(net, arr):
    return [arr[b.id, [int(p) for p in b.phases]].copy() for b in net.buses]


def fbs_solve(net: Network, s, tol: float = 1e-9, max_iter: int = 200) -> BranchFlowState:
    """Current-summation forward-backward sweep for constant-power injections.

    ``s[0]`` is ignored; the returned state's ``s[0]`` is the substation
    injection from the bus-0 balance and ``s[j]`` for ``j > 0`` are the given
    injections.  Raises :class:`FbsNotConverged` after ``max_iter`` sweeps.
    """
    import time

    _check_profile(net, s, "s")
    t0 = time.perf_counter()
    frm, to, z, lmask, bmask = _padded(net)
    sp = _pad(net, s)
    sp[0] = 0
    V = _pad(net, flat_profile(net))
    I = np.zeros((len(net.lines), 3), complex)
    change = np.inf
    it = 0
    while it < max_iter:
        it += 1
        change = fbs_sweep(frm, to, z, lmask, bmask, sp, V, I)
        if change < 0:
            raise PowerFlowError("zero voltage encountered during current computation")
        if not np.isfinite(change):
            break
        if change <= tol:
            break
    st = bfm_from_voltages(net, _unpad(net, V))
    given = [np.array(x, dtype=complex) for x in s]
    given[0] = st.s[0]
    st.meta["implied_s"] = st.s
    st.s = given
    st.iterations, st.change = it, float(change)
    st.wall_time = time.perf_counter() - t0
    if not change <= tol:
        st.converged = False
        raise FbsNotConverged(
            f"FBS did not converge in {it} sweeps (last change {change:.3e})", st, change)
    log.debug("fbs converged in %d sweeps", it)
    return st


def loss(st_or_s) -> float:
    """Total real injection ``sum_i sum_phi Re s_i``; equals line losses."""
    s = st_or_s.s if isinstance(st_or_s, BranchFlowState) else st_or_s
    return float(sum(np.real(x).sum() for x in s))


def line_losses(net: Network, st: BranchFlowState) -> float:
    return float(sum(np.real(np.diag(ln.z @ st.l[k])).sum() for k, ln in enumerate(net.lines)))
