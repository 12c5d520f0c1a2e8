import numpy as np
import pytest

from radialopf.network import Bus, Capacitor, Line, Network, PvInverter
from radialopf.phases import PhaseSet

BAL = np.exp(-2j * np.pi / 3 * np.arange(3))

# lines printed after the run by pytest_terminal_summary (filled by test_acceptance)
ACCEPTANCE_LINES: dict = {}


def substation(phases="abc"):
    ps = PhaseSet(phases)
    g = [int(p) for p in ps]
    k = len(ps)
    return Bus(0, ps, np.ones(k), np.ones(k), is_substation=True, v_ref=BAL[g])


def branch_bus(i, phases, load=None, devices=(), vmin=0.5, vmax=1.5):
    ps = PhaseSet(phases)
    k = len(ps)
    return Bus(i, ps, np.full(k, vmin), np.full(k, vmax), devices,
               load=None if load is None else np.broadcast_to(np.asarray(load, complex), (k,)))


def two_bus(z=0.01 + 0.02j, load=0.1 + 0.05j, devices=(), phases="a", vmin=0.5, vmax=1.5):
    """Single line feeder; ``z`` scalar (times identity-ish coupling) or matrix."""
    ps = PhaseSet(phases)
    k = len(ps)
    zm = np.asarray(z, complex)
    if zm.ndim == 0:
        zm = zm * (np.eye(k) + 0.3 * (1 - np.eye(k)))
    b0 = substation(phases)
    b1 = branch_bus(1, phases, load, devices, vmin, vmax)
    return Network((b0, b1), (Line(0, 1, ps, zm),))


def chain(n, phases="a", z=0.01 + 0.02j, load=0.0):
    buses = [substation(phases)] + [branch_bus(i, phases, load) for i in range(1, n)]
    k = len(PhaseSet(phases))
    lines = [Line(i - 1, i, PhaseSet(phases), z * np.eye(k)) for i in range(1, n)]
    return Network(tuple(buses), tuple(lines))


def star(n_leaves, phases="a", z=0.01 + 0.02j):
    buses = [substation(phases)] + [branch_bus(i, phases) for i in range(1, n_leaves + 1)]
    k = len(PhaseSet(phases))
    lines = [Line(0, i, PhaseSet(phases), z * np.eye(k)) for i in range(1, n_leaves + 1)]
    return Network(tuple(buses), tuple(lines))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


__all__ = ["Capacitor", "PvInverter", "substation", "branch_bus", "two_bus", "chain", "star", "BAL"]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
