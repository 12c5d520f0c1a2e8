"""Linear power flow: losses dropped and voltages assumed nearly balanced.

With those two simplifications the flows and squared voltages have a closed
form: each line carries the (negated) injections of its downstream subtree,
and ``v_j`` is ``v_0`` minus the accumulated ``S z^H + z S^H`` along the path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Network
from .phases import ABC, PhaseBlock, PhaseSet
from .powerflow import BranchFlowState, line_from_pos

ALPHA = np.exp(-2j * np.pi / 3)
BETA = np.array([1, ALPHA, ALPHA ** 2])
GAMMA = np.array([
    [1, ALPHA ** 2, ALPHA],
    [ALPHA, 1, ALPHA ** 2],
    [ALPHA ** 2, ALPHA, 1],
])
FLOW_FLOOR = 1e-6


def gamma_matrix(phases) -> PhaseBlock:
    ps = phases if isinstance(phases, PhaseSet) else PhaseSet(phases)
    g = [int(p) for p in ps]
    return PhaseBlock(ps, ps, GAMMA[np.ix_(g, g)])


def _gamma(ps: PhaseSet) -> np.ndarray:
    g = [int(p) for p in ps]
    return GAMMA[np.ix_(g, g)]


@dataclass
class LpfSolution:
    s0: np.ndarray
    Lambda: list
    S: list
    v: list
    wall_time: float = 0.0

    def magnitudes(self) -> list:
        return [np.sqrt(np.maximum(np.real(np.diag(vj)), 0.0)) for vj in self.v]


def lpf_solve(net: Network, s) -> LpfSolution:
    import time

    t0 = time.perf_counter()
    nb = len(net.buses)
    if len(s) != nb:
        raise ValueError(f"injections have {len(s)} entries for {nb} buses")
    for b, x in zip(net.buses, s):
        if np.shape(x) != (len(b.phases),):
            raise ValueError(f"injection at bus {b.id} does not match phases {b.phases}")
    # post-order: subtree sums of -s over each bus's own phases
    down = [-np.array(x, dtype=complex) for x in s]
    down[0] = np.zeros(len(net.buses[0].phases), complex)
    for k in range(len(net.lines) - 1, -1, -1):
        ln = net.lines[k]
        down[ln.from_bus][line_from_pos(net, k)] += down[ln.to_bus]
    lam = [down[ln.to_bus].copy() for ln in net.lines]
    S = [_gamma(ln.phases) * lam[k][None, :] for k, ln in enumerate(net.lines)]
    s0 = down[0].copy()
    vref = net.buses[0].v_ref
    v = [None] * nb
    v[0] = np.outer(vref, vref.conj())
    # pre-order: subtract path terms
    for k, ln in enumerate(net.lines):
        pos = line_from_pos(net, k)
        dz = S[k] @ ln.z.conj().T
        v[ln.to_bus] = v[ln.from_bus][np.ix_(pos, pos)] - (dz + dz.conj().T)
    return LpfSolution(s0, lam, S, v, time.perf_counter() - t0)


def lpf_error_report(net: Network, approx: LpfSolution, exact: BranchFlowState) -> dict:
    """Max voltage-magnitude error (p.u.) and max relative diagonal flow error (%)."""
    if len(approx.v) != len(exact.V) or len(approx.Lambda) != len(exact.S):
        raise ValueError("solutions belong to different networks")
    verr = 0.0
    for vj, Vj in zip(approx.magnitudes(), exact.V):
        if vj.shape != Vj.shape:
            raise ValueError("solutions belong to different networks")
        verr = max(verr, float(np.abs(vj - np.abs(Vj)).max(initial=0.0)))
    ferr = 0.0
    for lam, Sx in zip(approx.Lambda, exact.S):
        d = np.diag(Sx)
        ferr = max(ferr, float((np.abs(lam - d) / np.maximum(np.abs(d), FLOW_FLOOR)).max(initial=0.0)))
    return {"voltage_error_pu": verr, "flow_error_pct": 100.0 * ferr}


def balance_residual(net: Network, sol: LpfSolution, s) -> list:
    """Lossless balance residual at each bus; zero for :func:`lpf_solve` output."""
    res = [np.array(x, dtype=complex) for x in s]
    res[0] = np.array(sol.s0, dtype=complex)
    for k, ln in enumerate(net.lines):
        res[ln.to_bus] += sol.Lambda[k]
        res[ln.from_bus][line_from_pos(net, k)] -= sol.Lambda[k]
    return res
