"""Command-line interface.

Exit codes: 0 ok, 1 validation failure or infeasible, 2 I/O or parse error,
3 numerical failure.  Networks are given as a file path, a bundled feeder
name (``ieee13`` ...) or ``random[:N]`` for a seeded random feeder.
"""
from __future__ import annotations

import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import click
import jsonschema
import numpy as np

from . import io as nio
from .conic import SolverSettings, Status
from .io import SchemaError, ValidationError
from .lpf import lpf_error_report, lpf_solve
from .network import validate_network
from .powerflow import PowerFlowError, bim_residual, fbs_solve, max_abs
from .relax import (DEFAULT_THRESHOLD, RELAXATION_SETTINGS, NotExact, recover_voltages_alg1,
                    recover_voltages_alg2, solve_relaxation)

log = logging.getLogger("radialopf")

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3

RUN_HEADER = ("command", "network", "scenario", "status", "objective_kw", "wall_time_s",
              "max_ratio", "v_error_pu", "s_error_pct")


@dataclass
class RunRecord:
    command: str
    network: str
    scenario: str = ""
    status: str = ""
    objective_kw: float | None = None
    wall_time: float = 0.0
    max_ratio: float | None = None
    errors: dict = field(default_factory=dict)
    exit_code: int = EXIT_OK
    message: str = ""

    def row(self) -> list:
        return [self.command, self.network, self.scenario, self.status,
                _cell(self.objective_kw), self.wall_time, _cell(self.max_ratio),
                _cell(self.errors.get("voltage_error_pu")), _cell(self.errors.get("flow_error_pct"))]


def _cell(x):
    return "" if x is None else x


@dataclass
class Outcome:
    """A finished command: its record plus the CSV tables it produced."""

    record: RunRecord
    tables: dict = field(default_factory=dict)  # file name -> (header, rows)
    lines: list = field(default_factory=list)  # human-readable summary


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ValidationError):
        return EXIT_INVALID
    if isinstance(exc, (SchemaError, OSError, json.JSONDecodeError, KeyError)):
        return EXIT_IO
    if isinstance(exc, (PowerFlowError, np.linalg.LinAlgError, ZeroDivisionError)):
        return EXIT_NUMERIC
    return EXIT_NUMERIC


# -- loading -----------------------------------------------------------------------

def load_network_spec(spec: str, seed: int | None = None):
    if spec.startswith("random") and not Path(spec).exists():
        from .synthetic import random_feeder

        head, _, tail = spec.partition(":")
        if head != "random":
            raise SchemaError(f"cannot read {spec}")
        try:
            n = int(tail) if tail else None
        except ValueError:
            raise SchemaError(f"bad random feeder size in {spec!r}") from None
        return random_feeder(np.random.default_rng(seed), n)
    return nio.resolve_network(spec)


def _injections(net, path):
    return net.injection_floor() if path is None else nio.load_injections(path, net)


# -- commands as plain functions -----------------------------------------------------

def _voltage_rows(net, V):
    rows = []
    for b, v in zip(net.buses, V):
        for ph, x in zip(b.phases, v):
            rows.append((b.id, b.name or str(b.id), str(ph), abs(x), float(np.degrees(np.angle(x)))))
    return rows


def run_pf(spec, injections=None, seed=None, tol=1e-9, max_iter=200) -> Outcome:
    net = load_network_spec(spec, seed)
    s = _injections(net, injections)
    st = fbs_solve(net, s, tol=tol, max_iter=max_iter)
    res = max_abs(bim_residual(net, st.V, st.s)[1:])
    flows = []
    for k, ln in enumerate(net.lines):
        for ph, x in zip(ln.phases, np.diag(st.S[k])):
            flows.append((k, ln.from_bus, ln.to_bus, str(ph), x.real, x.imag))
    loss_kw = float(sum(np.real(x).sum() for x in st.s)) * net.base_power / 1000
    rec = RunRecord("pf", spec, status="converged", objective_kw=loss_kw, wall_time=st.wall_time)
    return Outcome(rec, {
        "voltages.csv": (("bus", "name", "phase", "magnitude_pu", "angle_deg"), _voltage_rows(net, st.V)),
        "flows.csv": (("line", "from", "to", "phase", "p_pu", "q_pu"), flows),
    }, [f"FBS converged in {st.iterations} iterations",
        f"loss {loss_kw:.6g} kW",
        f"max BIM residual {res:.3e} p.u."])


def run_lpf(spec, injections=None, seed=None) -> Outcome:
    net = load_network_spec(spec, seed)
    s = _injections(net, injections)
    sol = lpf_solve(net, s)
    vrows = []
    for b, m in zip(net.buses, sol.magnitudes()):
        for ph, x in zip(b.phases, m):
            vrows.append((b.id, b.name or str(b.id), str(ph), x))
    frows = []
    for k, ln in enumerate(net.lines):
        for ph, x in zip(ln.phases, sol.Lambda[k]):
            frows.append((k, ln.from_bus, ln.to_bus, str(ph), x.real, x.imag))
    rec = RunRecord("lpf", spec, status="ok", wall_time=sol.wall_time)
    return Outcome(rec, {
        "lpf_voltages.csv": (("bus", "name", "phase", "magnitude_pu"), vrows),
        "lpf_flows.csv": (("line", "from", "to", "phase", "lambda_p_pu", "lambda_q_pu"), frows),
    }, [f"LPF solved in {sol.wall_time:.3g} s"])


def run_compare(spec, injections=None, seed=None) -> Outcome:
    net = load_network_spec(spec, seed)
    s = _injections(net, injections)
    st = fbs_solve(net, s)
    sol = lpf_solve(net, s)
    rep = lpf_error_report(net, sol, st)
    rec = RunRecord("compare", spec, status="ok", wall_time=st.wall_time + sol.wall_time, errors=rep)
    header = ("network", "fbs_time_s", "lpf_time_s", "v_error_pu", "s_error_pct")
    row = (spec, st.wall_time, sol.wall_time, rep["voltage_error_pu"], rep["flow_error_pct"])
    return Outcome(rec, {"compare.csv": (header, [row])},
                   [_table(header, [row])])


def run_opf(spec, model="bfm", vband=None, threshold=DEFAULT_THRESHOLD, force_recover=False,
            solver_gap=None, solver_feas=None, seed=None) -> Outcome:
    net = load_network_spec(spec, seed)
    if vband is not None:
        if not 0 < vband < 1:
            raise ValidationError([f"voltage band {vband} must lie in (0, 1)"])
        net = net.with_vband(vband)
    settings = None
    if solver_gap is not None or solver_feas is not None:
        settings = SolverSettings(
            gap_tol=RELAXATION_SETTINGS.gap_tol if solver_gap is None else solver_gap,
            feas_tol=RELAXATION_SETTINGS.feas_tol if solver_feas is None else solver_feas)
    sol = solve_relaxation(net, model, settings, threshold)
    scenario = "file bounds" if vband is None else f"{1 - vband:g}/{1 + vband:g}"
    rec = RunRecord("opf", spec, scenario, sol.status.value, sol.objective_kw,
                    sol.build_time + sol.solve_time,
                    sol.report.max_ratio if sol.report else None)
    out = Outcome(rec)
    out.lines.append(_table(RUN_HEADER, [rec.row()]))
    if sol.status in (Status.PRIMAL_INFEASIBLE, Status.DUAL_INFEASIBLE):
        rec.exit_code = EXIT_INVALID
        rec.message = f"relaxation is {sol.status.value}"
    elif sol.status != Status.OPTIMAL:
        rec.exit_code = EXIT_NUMERIC
        rec.message = f"solver stopped with {sol.status.value}"
    if rec.exit_code:
        out.lines.append(rec.message)
        return out
    if sol.meta.get("fallback"):
        out.lines.append("tight tolerances failed; solved at solver defaults")
    out.tables["injections.csv"] = (nio.INJECTION_CSV_HEADER, [
        (b.id, str(ph), complex(v).real, complex(v).imag)
        for b, x in zip(net.buses, sol.point.s) for ph, v in zip(b.phases, x)])
    recover = recover_voltages_alg2 if model == "bfm" else recover_voltages_alg1
    try:
        r = recover(sol.point, net, threshold, force_recover)
    except NotExact as exc:
        out.lines.append(f"not exact: {exc}; voltages not recovered (see --force-recover)")
        return out
    rows = [row + (int(r.approximate),) for row in _voltage_rows(net, r.V)]
    out.tables["voltages.csv"] = (("bus", "name", "phase", "magnitude_pu", "angle_deg", "approximate"), rows)
    out.lines.append("recovered voltages are approximate" if r.approximate else "relaxation exact; voltages recovered")
    return out


def run_check(spec, seed=None) -> Outcome:
    net = load_network_spec(spec, seed) if spec.startswith("random") else nio.load_network(
        nio.bundled_path(spec) if spec in nio.BUNDLED and not Path(spec).exists() else spec,
        validate=False)
    vs = validate_network(net)
    rec = RunRecord("check", spec, status="ok" if not vs else "violations",
                    exit_code=EXIT_INVALID if vs else EXIT_OK)
    lines = [str(v) for v in vs] or [f"{spec}: no violations"]
    return Outcome(rec, {}, lines)


# -- batch ---------------------------------------------------------------------------

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["runs"],
    "properties": {
        "runs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["key", "command", "network"],
                "properties": {
                    "key": {"type": "string"},
                    "command": {"enum": ["pf", "lpf", "opf", "compare", "check"]},
                    "network": {"type": "string"},
                    "injections": {"type": "string"},
                    "model": {"enum": ["bim", "bfm"]},
                    "vband": {"type": "number"},
                    "threshold": {"type": "number"},
                    "force_recover": {"type": "boolean"},
                    "seed": {"type": "integer"},
                },
                "additionalProperties": False,
            },
        },
    },
}

_RUNNERS = {"pf": run_pf, "lpf": run_lpf, "opf": run_opf, "compare": run_compare, "check": run_check}


def _resolve_relative(value, base: Path):
    if value is None or Path(value).is_absolute():
        return value
    cand = base / value
    return str(cand) if cand.exists() else value


def run_batch_entry(entry: dict, base: Path, defaults: dict) -> tuple:
    kw = {k: v for k, v in entry.items() if k not in ("key", "command", "network")}
    kw["injections"] = _resolve_relative(kw.get("injections"), base)
    if kw["injections"] is None:
        kw.pop("injections")
    if entry["command"] == "opf":
        kw.setdefault("solver_gap", defaults.get("solver_gap"))
        kw.setdefault("solver_feas", defaults.get("solver_feas"))
    kw.setdefault("seed", defaults.get("seed"))
    spec = _resolve_relative(entry["network"], base)
    try:
        out = _RUNNERS[entry["command"]](spec, **kw)
        rec = out.record
    except Exception as exc:  # one failed run must not sink the batch
        rec = RunRecord(entry["command"], entry["network"], status="error",
                        exit_code=exit_code_for(exc), message=str(exc))
    rec.network = entry["network"]
    return entry["key"], rec


def run_batch(manifest_path, workers: int = 4, defaults: dict | None = None) -> list:
    """Run every manifest entry, possibly concurrently; results sorted by key."""
    path = Path(manifest_path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"manifest is not valid JSON: {exc}") from None
    try:
        jsonschema.validate(doc, MANIFEST_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"manifest: {exc.message}") from None
    keys = [r["key"] for r in doc["runs"]]
    if len(set(keys)) != len(keys):
        raise SchemaError("manifest keys must be unique")
    defaults = defaults or {}
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(lambda e: run_batch_entry(e, path.parent, defaults), doc["runs"]))
    return sorted(results, key=lambda kr: kr[0])


# -- presentation ---------------------------------------------------------------------

def _table(header, rows) -> str:
    cells = [list(header)] + [[nio.fmt(x) for x in r] for r in rows]
    widths = [max(len(r[c]) for r in cells) for c in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells)


def _emit(out: Outcome, out_dir):
    for line in out.lines:
        click.echo(line)
    if out_dir is not None:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        for name, (header, rows) in out.tables.items():
            nio.write_csv(d / name, header, rows)
        nio.write_csv(d / "run.csv", RUN_HEADER, [out.record.row()])


def _execute(fn, out_dir, **kw):
    try:
        out = fn(**kw)
    except Exception as exc:
        code = exit_code_for(exc)
        if code == EXIT_NUMERIC and not isinstance(exc, (PowerFlowError, np.linalg.LinAlgError,
                                                           ZeroDivisionError)):
            log.debug("unexpected error", exc_info=True)
        click.echo(f"error: {exc}", err=True)
        sys.exit(code)
    try:
        _emit(out, out_dir)
    except OSError as exc:
        click.echo(f"error: cannot write output: {exc}", err=True)
        sys.exit(EXIT_IO)
    sys.exit(out.record.exit_code)


# -- click wiring -----------------------------------------------------------------------

_out = click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                    help="Directory for CSV outputs.")
_inj = click.option("--injections", type=click.Path(), default=None,
                    help="Injection profile (JSON or CSV); default is minus the bus loads.")


@click.group()
@click.option("-v", "--verbose", count=True, help="Log more (repeatable).")
@click.option("--seed", type=int, default=None, help="Seed for random[:N] networks.")
@click.pass_context
def main(ctx, verbose, seed):
    """Multiphase radial power flow and OPF relaxations."""
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = {"seed": seed}


@main.command()
@click.argument("network")
@_inj
@_out
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--max-iter", type=int, default=200, show_default=True)
@click.pass_obj
def pf(obj, network, injections, out_dir, tol, max_iter):
    """Exact power flow by forward-backward sweep."""
    _execute(run_pf, out_dir, spec=network, injections=injections, seed=obj["seed"], tol=tol,
             max_iter=max_iter)


@main.command()
@click.argument("network")
@_inj
@_out
@click.pass_obj
def lpf(obj, network, injections, out_dir):
    """Linear power flow approximation."""
    _execute(run_lpf, out_dir, spec=network, injections=injections, seed=obj["seed"])


@main.command()
@click.argument("network")
@_inj
@_out
@click.pass_obj
def compare(obj, network, injections, out_dir):
    """Accuracy of the linear approximation against the sweep."""
    _execute(run_compare, out_dir, spec=network, injections=injections, seed=obj["seed"])


@main.command()
@click.argument("network")
@click.option("--model", type=click.Choice(["bim", "bfm"]), default="bfm", show_default=True)
@click.option("--vband", type=float, default=None, help="Override bounds with [1-x, 1+x].")
@click.option("--threshold", type=float, default=DEFAULT_THRESHOLD, show_default=True,
              help="Rank ratio below which a line block counts as rank one.")
@click.option("--force-recover", is_flag=True, help="Recover approximate voltages when not exact.")
@click.option("--solver-gap", type=float, default=None, help="Relative duality gap tolerance.")
@click.option("--solver-feas", type=float, default=None, help="Feasibility tolerance.")
@_out
@click.pass_obj
def opf(obj, network, model, vband, threshold, force_recover, solver_gap, solver_feas, out_dir):
    """Loss-minimizing OPF through a semidefinite relaxation."""
    _execute(run_opf, out_dir, spec=network, model=model, vband=vband, threshold=threshold,
             force_recover=force_recover, solver_gap=solver_gap, solver_feas=solver_feas,
             seed=obj["seed"])


@main.command()
@click.argument("network")
@click.pass_obj
def check(obj, network):
    """Validate a network file; exit 0 only when nothing is wrong."""
    _execute(run_check, None, spec=network, seed=obj["seed"])


@main.command()
@click.argument("manifest", type=click.Path())
@click.option("--workers", type=int, default=4, show_default=True)
@click.option("--solver-gap", type=float, default=None)
@click.option("--solver-feas", type=float, default=None)
@_out
@click.pass_obj
def batch(obj, manifest, workers, solver_gap, solver_feas, out_dir):
    """Run a JSON manifest of keyed runs; results are merged by key."""
    try:
        results = run_batch(manifest, workers, {"seed": obj["seed"], "solver_gap": solver_gap,
                                                "solver_feas": solver_feas})
    except SchemaError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_IO)
    header = ("key",) + RUN_HEADER + ("exit_code", "message")
    rows = [(k,) + tuple(r.row()) + (r.exit_code, r.message) for k, r in results]
    click.echo(_table(header, rows))
    if out_dir is not None:
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            nio.write_csv(Path(out_dir) / "batch.csv", header, rows)
        except OSError as exc:
            click.echo(f"error: cannot write output: {exc}", err=True)
            sys.exit(EXIT_IO)
    sys.exit(max((r.exit_code for _, r in results), default=EXIT_OK))


if __name__ == "__main__":
    main()
