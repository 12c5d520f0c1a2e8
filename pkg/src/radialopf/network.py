"""Radial multiphase network: buses, lines, devices, validation, tree queries."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np

from .phases import PhaseBlock, PhaseSet


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


# -- devices -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Capacitor:
    qmax: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "qmax", _frozen(self.qmax))


@dataclass(frozen=True, eq=False)
class PvInverter:
    p: np.ndarray
    smax: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _frozen(self.p))
        object.__setattr__(self, "smax", _frozen(self.smax))


@dataclass(frozen=True, eq=False)
class Composite:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))


DeviceRegion = Union[Capacitor, PvInverter, Composite]


def device_leaves(dev: DeviceRegion):
    if isinstance(dev, Composite):
        for p in dev.parts:
            yield from device_leaves(p)
    else:
        yield dev


# -- buses and lines -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Bus:
    """A bus.  ``load`` is constant-power consumption (p.u.), so the fixed part
    of the injection is ``-load``; devices add controllable injection."""

    id: int
    phases: PhaseSet
    vmin: np.ndarray
    vmax: np.ndarray
    devices: tuple = ()
    is_substation: bool = False
    v_ref: Optional[np.ndarray] = None
    load: Optional[np.ndarray] = None
    name: Optional[str] = None

    def __post_init__(self):
        k = len(self.phases)
        object.__setattr__(self, "vmin", _frozen(self.vmin))
        object.__setattr__(self, "vmax", _frozen(self.vmax))
        object.__setattr__(self, "devices", tuple(self.devices))
        if self.v_ref is not None:
            object.__setattr__(self, "v_ref", _frozen(self.v_ref, complex))
        load = np.zeros(k, complex) if self.load is None else self.load
        object.__setattr__(self, "load", _frozen(load, complex))
        for nm in ("vmin", "vmax", "load"):
            if getattr(self, nm).shape != (k,):
                raise ValueError(f"bus {self.id}: {nm} needs {k} entries for phases {self.phases}")
        if self.v_ref is not None and self.v_ref.shape != (k,):
            raise ValueError(f"bus {self.id}: vref needs {k} entries")


@dataclass(frozen=True, eq=False)
class Line:
    from_bus: int
    to_bus: int
    phases: PhaseSet
    z: np.ndarray
    name: Optional[str] = None

    def __post_init__(self):
        z = _frozen(self.z, complex)
        k = len(self.phases)
        if z.shape != (k, k):
            raise ValueError(f"line {self.from_bus}->{self.to_bus}: z must be {k}x{k}")
        object.__setattr__(self, "z", z)

    @property
    def z_block(self) -> PhaseBlock:
        return PhaseBlock(self.phases, self.phases, self.z, "impedance_pu")

    @cached_property
    def y(self) -> np.ndarray:
        y = np.linalg.inv(self.z)
        y.setflags(write=False)
        return y


@dataclass(frozen=True, eq=False)
class Network:
    """Rooted tree.  Bus ``i`` sits at ``buses[i]``; lines are stored in the
    order their ``to_bus`` is discovered by breadth-first search from bus 0."""

    buses: tuple
    lines: tuple
    base_power: float = 1e6
    base_voltage: float = 1.0
    name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))

    @property
    def n(self) -> int:
        """Number of non-substation buses."""
        return len(self.buses) - 1

    @cached_property
    def parent_line(self) -> dict:
        return {ln.to_bus: k for k, ln in enumerate(self.lines)}

    @cached_property
    def child_lines(self) -> dict:
        out = {b.id: [] for b in self.buses}
        for k, ln in enumerate(self.lines):
            out.setdefault(ln.from_bus, []).append(k)
        for v in out.values():
            v.sort(key=lambda k: self.lines[k].to_bus)
        return out

    @cached_property
    def order(self) -> tuple:
        """Bus ids in breadth-first order from the root, children ascending."""
        seen, out, q = {0}, [], deque([0])
        while q:
            i = q.popleft()
            out.append(i)
            for k in self.child_lines.get(i, ()):
                j = self.lines[k].to_bus
                if j not in seen:
                    seen.add(j)
                    q.append(j)
        return tuple(out)

    def bus(self, i: int) -> Bus:
        if not 0 <= i < len(self.buses):
            raise KeyError(f"unknown bus id {i}")
        return self.buses[i]

    def injection_floor(self) -> list:
        """Fixed injection ``-load`` per bus."""
        return [-b.load for b in self.buses]

    def with_vband(self, band: float) -> "Network":
        """Copy with every branch bus bounded to ``[1-band, 1+band]``."""
        buses = []
        for b in self.buses:
            if b.is_substation:
                buses.append(b)
                continue
            k = len(b.phases)
            buses.append(Bus(b.id, b.phases, np.full(k, 1 - band), np.full(k, 1 + band),
                             b.devices, False, None, b.load, b.name))
        return Network(tuple(buses), self.lines, self.base_power, self.base_voltage, self.name)

    def replace(self, **kw) -> "Network":
        d = dict(buses=self.buses, lines=self.lines, base_power=self.base_power,
                 base_voltage=self.base_voltage, name=self.name)
        d.update(kw)
        return Network(**d)


# -- validation ----------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    entity: str
    rule: str
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"[{self.severity}] {self.entity}: {self.message} ({self.rule})"


A1 = "assumption 1: connected radial network rooted at bus 0"
A2 = "assumption 2: strictly positive voltage lower bounds"
A3 = "assumption 3: line phases equal the downstream bus phases and nest in the upstream bus phases"


def validate_network(net: Network) -> list:
    """Return every broken invariant.  Devices with unreachable setpoints are
    reported as warnings only."""
    out: list = []
    nb = len(net.buses)
    for idx, b in enumerate(net.buses):
        if b.id != idx:
            out.append(Violation(f"bus {b.id}", "bus ids", f"bus at position {idx} has id {b.id}; ids must be 0..n in order"))
    if nb == 0:
        return [Violation("network", A1, "network has no buses")]
    if len(net.lines) != nb - 1:
        out.append(Violation("network", A1, f"not radial: {len(net.lines)} lines for {nb} buses"))
    ids = set(range(nb))
    parent: dict = {}
    for ln in net.lines:
        ent = f"line {ln.from_bus}->{ln.to_bus}"
        if ln.from_bus not in ids or ln.to_bus not in ids:
            out.append(Violation(ent, A1, "endpoint is not a bus"))
            continue
        if ln.to_bus == 0:
            out.append(Violation(ent, A1, "line points into the substation"))
        if ln.to_bus in parent:
            out.append(Violation(ent, A1, f"not radial: bus {ln.to_bus} has two parents"))
        parent[ln.to_bus] = ln.from_bus
        fb, tb = net.buses[ln.from_bus], net.buses[ln.to_bus]
        if not ln.phases <= fb.phases:
            out.append(Violation(ent, A3, f"line phases {ln.phases} not within bus {fb.id} phases {fb.phases}"))
        if ln.phases != tb.phases:
            out.append(Violation(ent, A3, f"line phases {ln.phases} differ from bus {tb.id} phases {tb.phases}"))
        z = np.asarray(ln.z)
        if not np.all(np.isfinite(z)) or np.linalg.matrix_rank(z) < z.shape[0]:
            out.append(Violation(ent, "impedance", "z is not full rank"))
    # reachability from 0 along oriented edges
    reach = set(net.order) if not any(v.rule == A1 and "endpoint" in v.message for v in out) else set()
    if reach and reach != ids:
        missing = sorted(ids - reach)
        out.append(Violation("network", A1, f"not connected or not rooted at bus 0: unreachable buses {missing[:10]}"))
    for b in net.buses:
        ent = f"bus {b.id}"
        if (b.id == 0) != b.is_substation:
            out.append(Violation(ent, A1, "bus 0 must be the unique substation"))
        if b.is_substation:
            if b.v_ref is None:
                out.append(Violation(ent, "substation", "substation needs vref"))
            elif np.any(b.v_ref == 0):
                out.append(Violation(ent, "substation", "vref entries must be nonzero"))
        elif b.v_ref is not None:
            out.append(Violation(ent, "substation", "vref is only allowed at the substation"))
        if not b.is_substation and np.any(~(b.vmin > 0)):
            out.append(Violation(ent, A2, f"vmin {b.vmin.tolist()} is not strictly positive"))
        if np.any(b.vmin > b.vmax):
            out.append(Violation(ent, "voltage bounds", "vmin exceeds vmax"))
        for d in b.devices:
            out.extend(_device_issues(d, b, ent))
    return out


def _device_issues(d, b: Bus, ent: str) -> list:
    k = len(b.phases)
    if isinstance(d, Composite):
        if not d.parts:
            return [Violation(ent, "device", "composite device has no parts")]
        return [v for p in d.parts for v in _device_issues(p, b, ent)]
    if isinstance(d, Capacitor):
        if d.qmax.shape != (k,):
            return [Violation(ent, "device", "capacitor qmax does not match bus phases")]
        if np.any(d.qmax < 0):
            return [Violation(ent, "device", "capacitor qmax is negative")]
        return []
    if d.p.shape != (k,) or d.smax.shape != (k,):
        return [Violation(ent, "device", "pv arrays do not match bus phases")]
    if np.any(d.smax < 0):
        return [Violation(ent, "device", "pv smax is negative")]
    if np.any(d.smax < np.abs(d.p)):
        return [Violation(ent, "device", "pv setpoint p exceeds smax; device region is empty", "warning")]
    return []


def errors(violations) -> list:
    return [v for v in violations if v.severity == "error"]


# -- tree queries --------------------------------------------------------------

def path_to_root(net: Network, j: int) -> list:
    """Lines on the path from bus 0 to bus ``j``, ordered outward."""
    net.bus(j)
    out = []
    while j != 0:
        k = net.parent_line[j]
        out.append(net.lines[k])
        j = net.lines[k].from_bus
    out.reverse()
    return out


def downstream_set(net: Network, j: int) -> frozenset:
    """Bus ``j`` together with all of its descendants."""
    net.bus(j)
    out, stack = set(), [j]
    while stack:
        i = stack.pop()
        out.add(i)
        stack.extend(net.lines[k].to_bus for k in net.child_lines.get(i, ()))
    return frozenset(out)
