"""Random radial feeders and points on them, for tests and benchmarks.

Every generator takes a ``numpy.random.Generator`` so runs are reproducible.
Bus ids follow breadth-first order, so each line's sending bus precedes its
receiving bus.
"""
from __future__ import annotations

import numpy as np

from .network import Bus, Capacitor, Composite, Line, Network, PvInverter
from .phases import ABC, PhaseSet
from .powerflow import fbs_solve

BALANCED = np.exp(-2j * np.pi / 3 * np.arange(3))
PHASE_SUBSETS = ("abc", "ab", "bc", "ac", "a", "b", "c")


def random_impedance(rng, phases: PhaseSet, scale: float) -> np.ndarray:
    """Symmetric, diagonally dominant ``z`` with self terms of size about ``scale``."""
    r = rng.uniform(0.3, 0.6) * scale
    x = rng.uniform(0.6, 1.0) * scale
    mr, mx = rng.uniform(0.2, 0.45, 2)
    R = r * (np.eye(3) + mr * (1 - np.eye(3)))
    X = x * (np.eye(3) + mx * (1 - np.eye(3)))
    g = [int(p) for p in phases]
    return (R + 1j * X)[np.ix_(g, g)]


def _child_phases(rng, parent: PhaseSet, three_phase_bias: float) -> PhaseSet:
    if len(parent) == 3 and rng.random() < three_phase_bias:
        return parent
    subsets = [PhaseSet(s) for s in PHASE_SUBSETS if PhaseSet(s) <= parent]
    return subsets[rng.integers(len(subsets))]


def _random_device(rng, k: int, scale: float):
    kind = rng.choice(["capacitor", "pv", "composite"], p=[0.45, 0.4, 0.15])
    if kind == "capacitor":
        return Capacitor(rng.uniform(0.2, 1.0, k) * scale)
    if kind == "pv":
        p = rng.uniform(0.0, 0.8, k) * scale
        return PvInverter(p, p + rng.uniform(0.1, 0.6, k) * scale)
    p = rng.uniform(0.0, 0.5, k) * scale
    return Composite((Capacitor(rng.uniform(0.1, 0.5, k) * scale),
                      PvInverter(p, p + rng.uniform(0.1, 0.4, k) * scale)))


def random_feeder(rng, n_buses: int | None = None, *, load_scale: float = 0.1,
                  z_scale: float = 0.05, device_prob: float = 0.5, band: float = 0.1,
                  three_phase_bias: float = 0.5, vref=None) -> Network:
    """A random tree with mixed 1/2/3-phase laterals, constant-power loads of
    up to ``load_scale`` p.u. and capacitor/PV devices."""
    n = int(rng.integers(2, 9)) if n_buses is None else int(n_buses)
    if n < 2:
        raise ValueError("a feeder needs at least two buses")
    vr = BALANCED.copy() if vref is None else np.asarray(vref, dtype=complex)
    buses = [Bus(0, ABC, np.ones(3), np.ones(3), is_substation=True, v_ref=vr, name="0")]
    lines = []
    parent_prev = 0
    for j in range(1, n):
        # nondecreasing parents keep ids in breadth-first order
        i = int(rng.integers(parent_prev, j))
        parent_prev = i
        ph = _child_phases(rng, buses[i].phases, three_phase_bias)
        k = len(ph)
        load = rng.uniform(0.2, 1.0, k) * load_scale * (1 + 1j * rng.uniform(0.1, 0.6, k))
        devs = (_random_device(rng, k, load_scale),) if rng.random() < device_prob else ()
        buses.append(Bus(j, ph, np.full(k, 1 - band), np.full(k, 1 + band), devs, load=load,
                         name=str(j)))
        lines.append(Line(i, j, ph, random_impedance(rng, ph, z_scale), name=f"{i}-{j}"))
    return Network(tuple(buses), tuple(lines), name=f"random{n}")


def light_load_feeder(rng, n_buses: int | None = None) -> Network:
    """Loads at most 0.05 p.u. and impedance entries at most 0.02 p.u."""
    return random_feeder(rng, n_buses, load_scale=0.05 / np.sqrt(1 + 0.36), z_scale=0.02 / 1.2,
                         device_prob=0.0)


def sample_device_injection(rng, dev, k: int) -> np.ndarray:
    """A random point of ``dev``'s injection set."""
    if isinstance(dev, Composite):
        return sum(sample_device_injection(rng, p, k) for p in dev.parts)
    if isinstance(dev, Capacitor):
        return 1j * rng.uniform(0, 1, k) * dev.qmax
    qcap = np.sqrt(np.maximum(dev.smax ** 2 - dev.p ** 2, 0.0))
    return dev.p + 1j * rng.uniform(-1, 1, k) * qcap


def sample_injections(rng, net: Network) -> list:
    """Feasible bus injections: ``-load`` plus a random device setpoint."""
    s = [np.zeros(len(net.buses[0].phases), complex)]
    for b in net.buses[1:]:
        x = -np.array(b.load, dtype=complex)
        for d in b.devices:
            x = x + sample_device_injection(rng, d, len(b.phases))
        s.append(x)
    return s


def with_bounds_around(net: Network, V, margin: float = 0.02) -> Network:
    """Copy of ``net`` whose voltage bounds contain the magnitudes of ``V``."""
    buses = [net.buses[0]]
    for b in net.buses[1:]:
        m = np.abs(V[b.id])
        lo = np.maximum(np.minimum(b.vmin, m - margin), 0.05)
        hi = np.maximum(b.vmax, m + margin)
        buses.append(Bus(b.id, b.phases, lo, hi, b.devices, False, None, b.load, b.name))
    return net.replace(buses=tuple(buses))


def feeder_with_profile(rng, n_buses: int | None = None, **kw):
    """Random feeder plus a feasible injection profile and its FBS solution.

    Bounds are widened where needed so the profile is OPF-feasible.
    Returns ``(net, s, state)``.
    """
    net = random_feeder(rng, n_buses, **kw)
    s = sample_injections(rng, net)
    st = fbs_solve(net, s)
    return with_bounds_around(net, st.V), st.s, st


def random_voltages(rng, net: Network, spread: float = 0.05) -> list:
    """Voltages near balanced nominal with the substation at its reference."""
    V = [np.array(net.buses[0].v_ref, dtype=complex)]
    for b in net.buses[1:]:
        g = [int(p) for p in b.phases]
        mag = 1 + rng.uniform(-spread, spread, len(g))
        ang = rng.uniform(-spread, spread, len(g))
        V.append(BALANCED[g] * mag * np.exp(1j * ang))
    return V


def forward_point(rng, n_buses: int | None = None, spread: float = 0.05, **kw):
    """Random feeder and random voltages with bounds that contain them.

    Returns ``(net, V)``; the rank-one points built from ``V`` satisfy every
    relaxation constraint except device membership.
    """
    net = random_feeder(rng, n_buses, **kw)
    V = random_voltages(rng, net, spread)
    return with_bounds_around(net, V), V
