from dataclasses import replace

import numpy as np
import pytest

from conftest import chain, two_bus
from radialopf.io import load_bundled
from radialopf.lpf import (ALPHA, balance_residual, gamma_matrix, lpf_error_report, lpf_solve)
from radialopf.powerflow import fbs_solve
from radialopf.synthetic import light_load_feeder


def inj(net):
    return [np.array(x) for x in net.injection_floor()]


def test_gamma_examples():
    assert np.array_equal(np.asarray(gamma_matrix("a")), [[1]])
    g = np.asarray(gamma_matrix("ab"))
    assert np.allclose(g, [[1, ALPHA ** 2], [ALPHA, 1]])
    g3 = np.asarray(gamma_matrix("abc"))
    assert np.allclose(g3, g3.conj().T)
    assert np.allclose(np.sort(np.linalg.eigvalsh(g3)), [0, 0, 3], atol=1e-14)


def test_chain_flows():
    # [DERIVED] two loads of 0.1 in series: upstream line carries both
    net = chain(3, load=0.1)
    sol = lpf_solve(net, inj(net))
    assert sol.Lambda[0][0] == pytest.approx(0.2)
    assert sol.Lambda[1][0] == pytest.approx(0.1)
    assert sol.s0[0] == pytest.approx(0.2)


def test_single_phase_voltage_closed_form():
    z = 0.01 + 0.02j
    net = two_bus(z=z, load=0.1 + 0.05j)
    sol = lpf_solve(net, inj(net))
    S = 0.1 + 0.05j
    assert sol.v[1][0, 0] == pytest.approx(1 - 2 * (S * np.conj(z)).real, abs=1e-15)


@pytest.mark.parametrize("name", ["ieee13", "ieee37", "ieee123"])
def test_balance_exact_and_hermitian(name):
    net = load_bundled(name)
    s = inj(net)
    sol = lpf_solve(net, s)
    assert max(np.abs(r).max() for r in balance_residual(net, sol, s)) <= 1e-14
    for v in sol.v:
        assert np.array_equal(v, v.conj().T) or np.allclose(v, v.conj().T, atol=1e-15)


def test_zero_impedance_limit():
    # small enough that the dropped terms vanish, large enough that y (V_i - V_j) keeps precision
    net = two_bus(z=1e-7 + 1e-7j, phases="abc")
    s = inj(net)
    rep = lpf_error_report(net, lpf_solve(net, s), fbs_solve(net, s, tol=1e-13))
    assert rep["voltage_error_pu"] <= 1e-10
    assert rep["flow_error_pct"] <= 1e-4


def test_light_load_accuracy(rng):
    for _ in range(10):
        net = light_load_feeder(rng, int(rng.integers(2, 8)))
        s = inj(net)
        rep = lpf_error_report(net, lpf_solve(net, s), fbs_solve(net, s, tol=1e-12))
        assert rep["voltage_error_pu"] <= 1e-3


def test_error_grows_with_impedance(rng):
    violations = 0
    for _ in range(20):
        net = light_load_feeder(rng, int(rng.integers(3, 8)))
        s = inj(net)
        big = net.replace(lines=tuple(replace(ln, z=2 * ln.z) for ln in net.lines))
        e1 = lpf_error_report(net, lpf_solve(net, s), fbs_solve(net, s, tol=1e-12))
        e2 = lpf_error_report(big, lpf_solve(big, s), fbs_solve(big, s, tol=1e-12))
        violations += e2["voltage_error_pu"] < e1["voltage_error_pu"]
    assert violations <= 1


def test_mismatched_solutions_rejected():
    a, b = chain(3), chain(4)
    with pytest.raises(ValueError):
        lpf_error_report(a, lpf_solve(a, inj(a)), fbs_solve(b, inj(b)))
    with pytest.raises(ValueError):
        lpf_solve(a, inj(b))
