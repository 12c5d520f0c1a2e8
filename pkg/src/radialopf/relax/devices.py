"""Injection sets of buses as conic constraints, and a direct membership test."""
from __future__ import annotations

import numpy as np

from ..network import Bus, Capacitor, Composite, Network, PvInverter
from .model import Expr, Model


def device_constraints(m: Model, dev, k: int) -> Expr:
    """Add the constraints of ``dev`` to ``m``; return its injection (k-vector).

    Capacitor: ``Re s = 0, 0 <= Im s <= qmax``.  PV: ``Re s = p`` and
    ``|s| <= smax`` per phase.  Composite: sum of fresh per-part injections.
    """
    if isinstance(dev, Composite):
        if not dev.parts:
            raise ValueError("composite device has no parts")
        out = Expr.constant(np.zeros(k))
        for part in dev.parts:
            out = out + device_constraints(m, part, k)
        return out
    if isinstance(dev, Capacitor):
        if dev.qmax.shape != (k,):
            raise ValueError("capacitor does not match bus phases")
        q = m.nonneg(k)
        slack = m.nonneg(k)
        m.real_eq(Model.real_vector(q) + Model.real_vector(slack), dev.qmax)
        return 1j * Model.real_vector(q)
    if isinstance(dev, PvInverter):
        if dev.p.shape != (k,) or dev.smax.shape != (k,):
            raise ValueError("pv device does not match bus phases")
        coef = np.zeros((k, k), complex)
        ids = []
        for ph in range(k):
            t, u, w = m.soc(3)
            m.real_eq(Model.real_vector([t]), [dev.smax[ph]])
            m.real_eq(Model.real_vector([u]), [dev.p[ph]])
            ids.append(w)
            coef[ph, ph] = 1j
        return Expr(np.array(ids), coef, dev.p.astype(complex))
    raise TypeError(f"unknown device {dev!r}")


def bus_injection(m: Model, bus: Bus) -> Expr:
    """``-load`` plus the controllable device injections of ``bus``."""
    k = len(bus.phases)
    e = Expr.constant(-bus.load)
    for d in bus.devices:
        e = e + device_constraints(m, d, k)
    return e


def in_region(dev, s, tol=1e-9) -> bool:
    """Membership of injection ``s`` in ``dev``'s set (composite by a small
    per-phase convex feasibility problem)."""
    s = np.asarray(s, dtype=complex)
    if isinstance(dev, Capacitor):
        return bool(np.all(np.abs(s.real) <= tol) and np.all(s.imag >= -tol)
                    and np.all(s.imag <= dev.qmax + tol))
    if isinstance(dev, PvInverter):
        return bool(np.all(np.abs(s.real - dev.p) <= tol) and np.all(np.abs(s) <= dev.smax + tol))
    return _composite_member(dev, s, tol)


def _composite_member(dev, s, tol):
    from ..conic import Status, solve

    k = len(s)
    m = Model()
    e = device_constraints(m, dev, k)
    m.eq(e, s)
    prog, _ = m.compile()
    return solve(prog).status == Status.OPTIMAL


def bus_injection_ok(bus: Bus, s, tol=1e-7) -> bool:
    """Is ``s + load`` in the Minkowski sum of the bus's devices?"""
    net = np.asarray(s, dtype=complex) + bus.load
    if not bus.devices:
        return bool(np.abs(net).max(initial=0.0) <= tol)
    dev = bus.devices[0] if len(bus.devices) == 1 else Composite(bus.devices)
    return in_region(dev, net, tol)


def injection_bounds_ok(net: Network, s, tol=1e-7) -> bool:
    return all(bus_injection_ok(b, s[b.id], tol) for b in net.buses[1:])
