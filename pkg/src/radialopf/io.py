"""Reading and writing networks, injection profiles and CSV tables.

Network files are JSON.  ``units`` selects how raw numbers are read:

* ``"si"`` (default): impedances in ohms, powers in VA/var/W, ``vref`` in
  volts.  Everything is divided by the declared bases at parse time.
* ``"pu"``: all values are already per unit.

Voltage bounds ``vmin``/``vmax`` are per unit in both modes.  Complex numbers
are ``[re, im]`` pairs.  :func:`serialize_network` always writes the ``pu``
form, and parsing that form reproduces the network bit for bit.
"""
from __future__ import annotations

import csv
import json
from collections import deque
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema
import numpy as np

from .network import (Bus, Capacitor, Composite, Line, Network, PvInverter,
                      errors, validate_network)
from .phases import PhaseSet


class SchemaError(ValueError):
    """Document does not match the file format."""


class ValidationError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


_cplx = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_reals = {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 3}
_cvec = {"type": "array", "items": _cplx, "minItems": 1, "maxItems": 3}
_phases = {"type": "string", "pattern": "^[abc]{1,3}$"}

_device = {
    "type": "object",
    "required": ["type"],
    "oneOf": [
        {"properties": {"type": {"const": "capacitor"}, "qmax": _reals},
         "required": ["type", "qmax"], "additionalProperties": False},
        {"properties": {"type": {"const": "pv"}, "p": _reals, "smax": _reals},
         "required": ["type", "p", "smax"], "additionalProperties": False},
        {"properties": {"type": {"const": "composite"},
                        "parts": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/device"}}},
         "required": ["type", "parts"], "additionalProperties": False},
    ],
}

NETWORK_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"device": _device},
    "type": "object",
    "required": ["base_power_va", "base_voltage_v", "buses", "lines"],
    "properties": {
        "name": {"type": "string"},
        "units": {"enum": ["si", "pu"]},
        "base_power_va": {"type": "number", "exclusiveMinimum": 0},
        "base_voltage_v": {"type": "number", "exclusiveMinimum": 0},
        "buses": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "phases", "vmin", "vmax"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "name": {"type": "string"},
                    "phases": _phases,
                    "vmin": _reals, "vmax": _reals,
                    "vref": _cvec,
                    "load": _cvec,
                    "devices": {"type": "array", "items": {"$ref": "#/$defs/device"}},
                },
            },
        },
        "lines": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["from", "to", "phases", "z"],
                "additionalProperties": False,
                "properties": {
                    "from": {"type": "integer", "minimum": 0},
                    "to": {"type": "integer", "minimum": 0},
                    "name": {"type": "string"},
                    "phases": _phases,
                    "z": {"type": "array", "items": _cvec, "minItems": 1, "maxItems": 3},
                },
            },
        },
    },
    "additionalProperties": False,
}

INJECTION_SCHEMA = {
    "type": "object",
    "required": ["injections"],
    "properties": {
        "units": {"enum": ["si", "pu"]},
        "injections": {
            "type": "array",
            "items": {
                "type": "object", "required": ["bus", "s"], "additionalProperties": False,
                "properties": {"bus": {"type": "integer", "minimum": 0}, "s": _cvec},
            },
        },
    },
    "additionalProperties": False,
}


def _validate_schema(doc, schema, what):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{what} schema violation at {where}: {exc.message}") from None


def _as_doc(document):
    if isinstance(document, dict):
        return document
    if isinstance(document, (bytes, str)):
        try:
            return json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from None
    raise TypeError("document must be a JSON string or a dict")


def _c(pairs) -> np.ndarray:
    return np.array([complex(re, im) for re, im in pairs], dtype=complex)


def _pairs(arr) -> list:
    return [[float(x.real), float(x.imag)] for x in np.asarray(arr, dtype=complex).ravel()]


def _check_len(arr, k, what):
    if len(arr) != k:
        raise SchemaError(f"{what}: expected {k} phase entries, got {len(arr)}")


def _device(d, k, ps, where):
    t = d["type"]
    if t == "capacitor":
        _check_len(d["qmax"], k, where + " qmax")
        return Capacitor(np.array(d["qmax"], float) / ps)
    if t == "pv":
        _check_len(d["p"], k, where + " p")
        _check_len(d["smax"], k, where + " smax")
        return PvInverter(np.array(d["p"], float) / ps, np.array(d["smax"], float) / ps)
    return Composite(tuple(_device(p, k, ps, where) for p in d["parts"]))


def _orient(nb: int, raw: list) -> list | None:
    """Root the undirected edge list at bus 0 (BFS, ascending neighbours).
    Returns ``(parent, child, record)`` in discovery order or None if the
    edges do not form a spanning tree."""
    if len(raw) != nb - 1:
        return None
    adj = {i: [] for i in range(nb)}
    for rec in raw:
        a, b = rec["from"], rec["to"]
        if a not in adj or b not in adj or a == b:
            return None
        adj[a].append((b, rec))
        adj[b].append((a, rec))
    out, seen, q = [], {0}, deque([0])
    while q:
        i = q.popleft()
        for j, rec in sorted(adj[i], key=lambda t: t[0]):
            if j not in seen:
                seen.add(j)
                out.append((i, j, rec))
                q.append(j)
    return out if len(seen) == nb else None


def parse_network(document, validate: bool = True) -> Network:
    """Build a per-unit :class:`Network` from a JSON string or dict.

    Raises :class:`SchemaError` on format problems and, when ``validate`` is
    set, :class:`ValidationError` if any error-level invariant is broken.
    """
    doc = _as_doc(document)
    _validate_schema(doc, NETWORK_SCHEMA, "network")
    si = doc.get("units", "si") == "si"
    sb, vb = float(doc["base_power_va"]), float(doc["base_voltage_v"])
    ps = sb if si else 1.0
    vs = vb if si else 1.0
    zs = vb * vb / sb if si else 1.0

    recs = sorted(doc["buses"], key=lambda r: r["id"])
    ids = [r["id"] for r in recs]
    if ids != list(range(len(recs))):
        raise SchemaError(f"bus ids must be exactly 0..{len(recs) - 1}, got {ids}")
    buses = []
    for r in recs:
        ph = PhaseSet(r["phases"])
        k = len(ph)
        where = f"bus {r['id']}"
        _check_len(r["vmin"], k, where + " vmin")
        _check_len(r["vmax"], k, where + " vmax")
        vref = None
        if "vref" in r:
            _check_len(r["vref"], k, where + " vref")
            vref = _c(r["vref"]) / vs
        load = None
        if "load" in r:
            _check_len(r["load"], k, where + " load")
            load = _c(r["load"]) / ps
        devs = tuple(_device(d, k, ps, where) for d in r.get("devices", ()))
        buses.append(Bus(r["id"], ph, np.array(r["vmin"], float), np.array(r["vmax"], float),
                         devs, r["id"] == 0, vref, load, r.get("name")))

    raw = doc["lines"]
    oriented = _orient(len(buses), raw)
    if oriented is None:
        if validate:
            if len(raw) != len(buses) - 1:
                msg = f"not radial: {len(raw)} lines for {len(buses)} buses"
            else:
                msg = "not radial: lines do not form a tree spanning bus 0"
            from .network import A1, Violation
            raise ValidationError([Violation("network", A1, msg)])
        oriented = [(r["from"], r["to"], r) for r in raw]
    lines = []
    for a, b, r in oriented:
        ph = PhaseSet(r["phases"])
        k = len(ph)
        z = r["z"]
        if len(z) != k or any(len(row) != k for row in z):
            raise SchemaError(f"line {r['from']}-{r['to']}: z must be {k}x{k}")
        zm = np.array([[complex(re, im) for re, im in row] for row in z]) / zs
        lines.append(Line(a, b, ph, zm, r.get("name")))
    net = Network(tuple(buses), tuple(lines), sb, vb, doc.get("name"))
    if validate:
        errs = errors(validate_network(net))
        if errs:
            raise ValidationError(errs)
    return net


def _device_doc(d) -> dict:
    if isinstance(d, Capacitor):
        return {"type": "capacitor", "qmax": [float(x) for x in d.qmax]}
    if isinstance(d, PvInverter):
        return {"type": "pv", "p": [float(x) for x in d.p], "smax": [float(x) for x in d.smax]}
    return {"type": "composite", "parts": [_device_doc(p) for p in d.parts]}


def network_to_dict(net: Network) -> dict:
    buses = []
    for b in net.buses:
        r = {"id": b.id}
        if b.name is not None:
            r["name"] = b.name
        r["phases"] = str(b.phases)
        r["vmin"] = [float(x) for x in b.vmin]
        r["vmax"] = [float(x) for x in b.vmax]
        if b.v_ref is not None:
            r["vref"] = _pairs(b.v_ref)
        if np.any(b.load != 0):
            r["load"] = _pairs(b.load)
        if b.devices:
            r["devices"] = [_device_doc(d) for d in b.devices]
        buses.append(r)
    lines = []
    for ln in net.lines:
        r = {"from": ln.from_bus, "to": ln.to_bus}
        if ln.name is not None:
            r["name"] = ln.name
        r["phases"] = str(ln.phases)
        r["z"] = [_pairs(row) for row in ln.z]
        lines.append(r)
    doc = {}
    if net.name is not None:
        doc["name"] = net.name
    doc.update(units="pu", base_power_va=float(net.base_power),
               base_voltage_v=float(net.base_voltage), buses=buses, lines=lines)
    return doc


def serialize_network(net: Network, indent: int | None = 1) -> str:
    return json.dumps(network_to_dict(net), indent=indent)


def load_network(path, validate: bool = True) -> Network:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from None
    return parse_network(text, validate=validate)


def save_network(net: Network, path) -> None:
    Path(path).write_text(serialize_network(net) + "\n")


BUNDLED = ("ieee13", "ieee34", "ieee37", "ieee123")


def bundled_path(name: str):
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled feeder {name!r}; choose from {BUNDLED}")
    return resources.files("radialopf") / "data" / f"{name}.json"


def load_bundled(name: str) -> Network:
    return parse_network(bundled_path(name).read_text())


def resolve_network(spec: str) -> Network:
    """Load a path, or a bundled feeder given as ``ieee13`` etc."""
    if spec in BUNDLED and not Path(spec).exists():
        return load_bundled(spec)
    return load_network(spec)


# -- injections ------------------------------------------------------------------

def parse_injections(document, net: Network) -> list:
    """Per-bus net injection vectors (p.u.).  Buses absent from the file get
    zero; the substation entry, if given, is ignored by the solvers."""
    doc = _as_doc(document)
    _validate_schema(doc, INJECTION_SCHEMA, "injection")
    scale = net.base_power if doc.get("units", "pu") == "si" else 1.0
    out = [np.zeros(len(b.phases), complex) for b in net.buses]
    for r in doc["injections"]:
        i = r["bus"]
        if i >= len(net.buses):
            raise SchemaError(f"injection for unknown bus {i}")
        _check_len(r["s"], len(net.buses[i].phases), f"injection at bus {i}")
        out[i] = _c(r["s"]) / scale
    return out


def load_injections(path, net: Network) -> list:
    """Read a JSON injection document, or the CSV written by
    :func:`write_injections_csv` when the file name ends in ``.csv``."""
    if str(path).lower().endswith(".csv"):
        return read_injections_csv(path, net)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from None
    return parse_injections(text, net)


def injections_to_dict(s: Sequence) -> dict:
    return {"units": "pu",
            "injections": [{"bus": i, "s": _pairs(v)} for i, v in enumerate(s) if i > 0]}


# -- CSV ---------------------------------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) for x in r])


def read_csv(path) -> tuple:
    """Return ``(header, rows)``; numeric cells come back as float or int."""
    def conv(cell):
        for t in (int, float):
            try:
                return t(cell)
            except ValueError:
                pass
        return cell

    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        rows = [[conv(c) for c in r] for r in rd]
    return header, rows


INJECTION_CSV_HEADER = ("bus", "phase", "p_pu", "q_pu")


def write_injections_csv(path, net: Network, s) -> None:
    rows = []
    for b, x in zip(net.buses, s):
        for ph, v in zip(b.phases, x):
            rows.append((b.id, str(ph), complex(v).real, complex(v).imag))
    write_csv(path, INJECTION_CSV_HEADER, rows)


def read_injections_csv(path, net: Network) -> list:
    try:
        header, rows = read_csv(path)
    except (OSError, StopIteration) as exc:
        raise SchemaError(f"cannot read injection table {path}: {exc}") from None
    if tuple(header) != INJECTION_CSV_HEADER:
        raise SchemaError(f"injection table header must be {','.join(INJECTION_CSV_HEADER)}")
    out = [np.zeros(len(b.phases), complex) for b in net.buses]
    for r in rows:
        if len(r) != 4:
            raise SchemaError(f"malformed injection row {r}")
        i, ph, p, q = r
        if not isinstance(i, int) or not 0 <= i < len(net.buses):
            raise SchemaError(f"injection for unknown bus {i}")
        ps = net.buses[i].phases
        if not isinstance(ph, str) or ph not in ("a", "b", "c") or not PhaseSet(ph) <= ps:
            raise SchemaError(f"bus {i} has no phase {ph}")
        if not all(isinstance(x, (int, float)) for x in (p, q)):
            raise SchemaError(f"non-numeric injection at bus {i}")
        out[i][PhaseSet(ph).positions_in(ps)[0]] = complex(p, q)
    return out
