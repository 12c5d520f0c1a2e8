"""BIM-SDP and BFM-SDP as conic programs, and solving them end to end.

Both relaxations minimize total real injection (the network loss) over the
bus injection sets, with the substation voltage fixed, squared voltage
magnitude bounds, and one Hermitian PSD block per line.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..conic import SolverSettings, SolveResult, Status, solve
from ..network import Network, errors, validate_network
from ..powerflow import line_from_pos
from .devices import bus_injection
from .model import Expr, Model
from .points import (DEFAULT_THRESHOLD, BfmSdpPoint, BimSdpPoint, ExactnessReport,
                     exactness_report)

log = logging.getLogger(__name__)

# Rank ratios of near-zero-impedance lines scale like the duality gap over |z|,
# so relaxations are solved tighter than the generic solver default.  The
# feasibility floor sits at 1e-9 because larger feeders stall near 1e-10.
RELAXATION_SETTINGS = SolverSettings(gap_tol=1e-10, feas_tol=1e-9)


def loss_objective(net: Network) -> list:
    """Per-bus coefficient vectors ``c_i`` with ``C(s) = sum_i c_i . Re s_i``."""
    return [np.ones(len(b.phases)) for b in net.buses]


def evaluate_loss(net: Network, s) -> float:
    return float(sum(c @ np.real(x) for c, x in zip(loss_objective(net), s)))


@dataclass
class Relaxation:
    kind: str  # "bim" or "bfm"
    net: Network
    model: Model
    exprs: dict  # name -> list of Expr
    program: object = None
    perm: np.ndarray = None

    def point(self, x) -> BimSdpPoint | BfmSdpPoint:
        xmap = np.asarray(x, dtype=float)[self.perm]
        vals = {nm: [e.value(xmap) for e in lst] for nm, lst in self.exprs.items()}
        for nm in ("v", "l"):
            if nm in vals:
                vals[nm] = [(m + m.conj().T) / 2 for m in vals[nm]]
        if self.kind == "bim":
            return BimSdpPoint(vals["s"], vals["v"], vals["W"])
        return BfmSdpPoint(vals["s"], vals["v"], vals["S"], vals["l"])


def _check(net):
    errs = errors(validate_network(net))
    if errs:
        from ..io import ValidationError
        raise ValidationError(errs)


def _common(net, m, objective=None):
    """Injections ``s`` (substation free, others from devices), voltages ``v``
    (substation fixed) and their bounds.  ``objective`` is a per-bus list of
    coefficient vectors on ``Re s`` (default: the loss)."""
    b0 = net.buses[0]
    s = [m.complex_vector(len(b0.phases))]
    vr = b0.v_ref
    v = [Expr.constant(np.outer(vr, vr.conj()))]
    for b in net.buses[1:]:
        s.append(bus_injection(m, b))
        k = len(b.phases)
        vb = m.hermitian_matrix(k)
        d = vb.diag()
        lo, hi = m.nonneg(k), m.nonneg(k)
        m.real_eq(d - Model.real_vector(lo), b.vmin ** 2)
        m.real_eq(d + Model.real_vector(hi), b.vmax ** 2)
        v.append(vb)
    obj = Expr.constant(0.0)
    coefs = loss_objective(net) if objective is None else objective
    if len(coefs) != len(net.buses):
        raise ValueError("objective needs one coefficient vector per bus")
    for c, e in zip(coefs, s):
        obj = obj + (Expr(e.vars, c @ e.coef, c @ e.const))
    m.minimize(Expr(obj.vars, np.real(obj.coef), np.real(obj.const)))
    return s, v


def build_bim_sdp(net: Network, validate: bool = True, objective=None) -> Relaxation:
    if validate:
        _check(net)
    m = Model()
    s, v = _common(net, m, objective)
    W = []
    for ln in net.lines:
        k = len(ln.phases)
        W.append(m.complex_matrix(k, k))
    bal = [si * 1.0 for si in s]
    for k, ln in enumerate(net.lines):
        i, j = ln.from_bus, ln.to_bus
        pos = line_from_pos(net, k)
        yH = ln.y.conj().T
        vi = v[i].sub(pos)
        ni = len(net.buses[i].phases)
        bal[i] = bal[i] - ((vi - W[k]) @ yH).diag().embed(pos, ni)
        bal[j] = bal[j] - ((v[j] - W[k].H) @ yH).diag()
        m.psd_hermitian(Expr.block([[vi, W[k]], [W[k].H, v[j]]]))
    for e in bal:
        m.eq(e, 0.0)
    prog, perm = m.compile()
    return Relaxation("bim", net, m, {"s": s, "v": v, "W": W}, prog, perm)


def build_bfm_sdp(net: Network, validate: bool = True, objective=None) -> Relaxation:
    if validate:
        _check(net)
    m = Model()
    s, v = _common(net, m, objective)
    S, L = [], []
    bal = [si * 1.0 for si in s]
    for k, ln in enumerate(net.lines):
        i, j = ln.from_bus, ln.to_bus
        n = len(ln.phases)
        Sk = m.complex_matrix(n, n)
        Lk = m.hermitian_matrix(n)
        S.append(Sk)
        L.append(Lk)
        pos = line_from_pos(net, k)
        z = ln.z
        zH = z.conj().T
        ni = len(net.buses[i].phases)
        bal[j] = bal[j] + (Sk - z @ Lk).diag()
        bal[i] = bal[i] - Sk.diag().embed(pos, ni)
        vi = v[i].sub(pos)
        Sz = Sk @ zH
        m.eq(v[j] - vi + Sz + Sz.H - (z @ Lk) @ zH, 0.0, hermitian=True)
        m.psd_hermitian(Expr.block([[vi, Sk], [Sk.H, Lk]]))
    for e in bal:
        m.eq(e, 0.0)
    prog, perm = m.compile()
    return Relaxation("bfm", net, m, {"s": s, "v": v, "S": S, "l": L}, prog, perm)


@dataclass
class RelaxationSolution:
    kind: str
    status: Status
    objective: float | None  # p.u., includes constant terms
    point: BimSdpPoint | BfmSdpPoint | None
    report: ExactnessReport | None
    result: SolveResult
    build_time: float
    solve_time: float
    meta: dict = field(default_factory=dict)

    @property
    def objective_kw(self):
        return None if self.objective is None else self.objective * self.meta["base_power"] / 1000.0


def solve_relaxation(net: Network, kind: str = "bfm", settings: SolverSettings | None = None,
                     threshold: float = DEFAULT_THRESHOLD) -> RelaxationSolution:
    """Build and solve one relaxation.  With ``settings=None`` the tight
    :data:`RELAXATION_SETTINGS` are tried first and the solver defaults are
    used if that run fails numerically (``meta["fallback"]`` records it)."""
    if kind not in ("bim", "bfm"):
        raise ValueError(f"unknown relaxation kind {kind!r}")
    t0 = time.perf_counter()
    rel = build_bfm_sdp(net) if kind == "bfm" else build_bim_sdp(net)
    t1 = time.perf_counter()
    fallback = False
    if settings is None:
        res = solve(rel.program, RELAXATION_SETTINGS)
        if res.status in (Status.NUMERICAL_FAILURE, Status.ITERATION_LIMIT):
            fallback = True
            res = solve(rel.program, SolverSettings())
    else:
        res = solve(rel.program, settings)
    t2 = time.perf_counter()
    log.info("%s-sdp: n=%d m=%d status=%s it=%d", kind, rel.program.n, rel.program.m,
             res.status.name, res.iterations)
    point = rep = obj = None
    if res.status == Status.OPTIMAL:
        point = rel.point(res.x)
        obj = float(rel.program.c @ res.x) + rel.model.offset
        rep = exactness_report(point, net, threshold)
    return RelaxationSolution(kind, res.status, obj, point, rep, res, t1 - t0, t2 - t1,
                              {"base_power": net.base_power, "n": rel.program.n, "m": rel.program.m,
                               "fallback": fallback})
