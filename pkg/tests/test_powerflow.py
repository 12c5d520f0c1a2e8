import numpy as np
import pytest

from conftest import BAL, chain, two_bus
from radialopf.io import load_bundled
from radialopf.powerflow import (FbsNotConverged, PowerFlowError, bfm_from_voltages, bfm_residual,
                                 bim_residual, fbs_solve, flat_profile, line_losses, loss, max_abs)

# [DERIVED] closed form for one line z feeding s1 = -(0.1 + 0.05j) from V0 = 1:
# with w = z conj(s1) and V1 = a + jb, b = Im w and a = (1 + sqrt(1 + 4 (Re w - b^2))) / 2
V1_ORACLE = 0.9979937248600629 - 0.0015j
LOSS_ORACLE = 1.2550279874259417e-4
S0_ORACLE = 0.10012550279874238 + 0.05025100559748477j


def injections(net):
    return [np.array(x) for x in net.injection_floor()]


def test_two_bus_oracle():
    net = two_bus()
    st = fbs_solve(net, injections(net), tol=1e-12)
    assert st.V[1][0] == pytest.approx(V1_ORACLE, abs=1e-12)
    assert abs(st.V[1][0]) == pytest.approx(0.9979948521210231, abs=1e-12)
    assert loss(st) == pytest.approx(LOSS_ORACLE, abs=1e-12)
    assert st.s[0][0] == pytest.approx(S0_ORACLE, abs=1e-12)
    assert line_losses(net, st) == pytest.approx(LOSS_ORACLE, abs=1e-12)


def test_oracle_matches_closed_form():
    z, s1 = 0.01 + 0.02j, -(0.1 + 0.05j)
    w = z * np.conj(s1)
    b = w.imag
    a = (1 + np.sqrt(1 + 4 * (w.real - b * b))) / 2
    assert a + 1j * b == pytest.approx(V1_ORACLE, abs=1e-15)


def test_zero_injection_converges_immediately():
    net = load_bundled("ieee13")
    s = [np.zeros(len(b.phases), complex) for b in net.buses]
    st = fbs_solve(net, s)
    assert st.iterations == 1
    for v, f in zip(st.V, flat_profile(net)):
        assert np.array_equal(v, f)
    assert loss(st) == 0.0


def test_balanced_load_gives_symmetric_voltages():
    z = (0.01 + 0.02j) * (np.eye(3) + 0.3 * (1 - np.eye(3)))
    net = two_bus(z=z, load=0.1 + 0.05j, phases="abc")
    st = fbs_solve(net, injections(net), tol=1e-12)
    v = st.V[1]
    assert np.allclose(v, v[0] * BAL, atol=1e-12)


def test_bim_residual_on_fbs_solution():
    net = load_bundled("ieee13")
    st = fbs_solve(net, injections(net), tol=1e-12)
    assert max_abs(bim_residual(net, st.V, st.s)) <= 1e-9


def test_bfm_residual_examples():
    net = load_bundled("ieee13")
    st = fbs_solve(net, injections(net), tol=1e-12)
    assert max_abs(bfm_residual(net, st)) <= 1e-9
    eps = 1e-3
    st.l = [l + eps * np.eye(len(l)) for l in st.l]
    res = bfm_residual(net, st)
    assert max_abs(res["slack_l"]) == pytest.approx(eps, rel=1e-12)
    assert max_abs(res["ohm"]) <= 1e-9


def test_bfm_from_voltages_is_consistent(rng):
    net = chain(4, phases="abc", z=0.02 + 0.03j)
    V = [BAL * (1 + 0.02 * rng.normal(size=3)) for _ in net.buses]
    st = bfm_from_voltages(net, V)
    assert max_abs(bfm_residual(net, st)) <= 1e-13
    assert max_abs(bim_residual(net, st.V, st.s)) <= 1e-13


def test_deterministic():
    net = load_bundled("ieee123")
    a = fbs_solve(net, injections(net))
    b = fbs_solve(net, injections(net))
    assert all(np.array_equal(x, y) for x, y in zip(a.V, b.V))


@pytest.mark.parametrize("name", ["ieee13", "ieee37", "ieee123"])
def test_losses_positive(name):
    net = load_bundled(name)
    st = fbs_solve(net, injections(net))
    assert loss(st) > 0
    assert loss(st) == pytest.approx(line_losses(net, st), rel=1e-6)


def test_not_converged_raises():
    net = two_bus(load=3.0 + 3.0j, z=0.1 + 0.2j)
    with pytest.raises(FbsNotConverged) as ei:
        fbs_solve(net, injections(net), max_iter=30)
    assert ei.value.state is not None


def test_bad_shapes_rejected():
    net = two_bus()
    with pytest.raises(ValueError):
        fbs_solve(net, [np.zeros(1)])
    with pytest.raises(ValueError):
        bim_residual(net, flat_profile(net), [np.zeros(1), np.zeros(2)])


def test_error_hierarchy():
    assert issubclass(FbsNotConverged, PowerFlowError)


def test_bim_residual_direct_evaluation():
    net = two_bus()
    V = [np.array([1.0 + 0j]), np.array([0.95 + 0j])]
    y = 1 / (0.01 + 0.02j)
    s1 = 0.95 * np.conj(y * (0.95 - 1.0))
    s0 = 1.0 * np.conj(y * (1.0 - 0.95))
    res = bim_residual(net, V, [np.array([s0]), np.array([s1])])
    assert abs(res[0][0]) <= 1e-15 and abs(res[1][0]) <= 1e-15


def test_flat_profile_zero_state():
    net = load_bundled("ieee13")
    st = bfm_from_voltages(net, flat_profile(net))
    assert max_abs(st.I) == 0 and max_abs(st.S) == 0 and max_abs(st.l) == 0 and max_abs(st.s) == 0
    s = [np.zeros(len(b.phases), complex) for b in net.buses]
    assert max_abs(bim_residual(net, flat_profile(net), s)) == 0


def test_zero_current_unequal_voltages_ohm_residual():
    net = two_bus()
    st = bfm_from_voltages(net, [np.array([1.0 + 0j]), np.array([0.95 + 0j])])
    st.I = [np.zeros(1, complex)]
    assert max_abs(bfm_residual(net, st)["ohm"]) == pytest.approx(0.05)


def test_fbs_voltages_recover_injections():
    net = load_bundled("ieee37")
    s = injections(net)
    st = fbs_solve(net, s, tol=1e-12)
    again = bfm_from_voltages(net, st.V)
    for j in range(1, len(net.buses)):
        assert np.allclose(again.s[j], s[j], atol=1e-8)


def test_equivalence_on_random_mixed_networks(rng):
    from radialopf.synthetic import random_feeder, random_voltages
    for _ in range(25):
        net = random_feeder(rng, int(rng.integers(2, 6)))
        V = random_voltages(rng, net)
        st = bfm_from_voltages(net, V)
        assert max_abs(bfm_residual(net, st)) <= 1e-10
        assert max_abs(bim_residual(net, st.V, st.s)) <= 1e-10
        fs = fbs_solve(net, injections(net))
        assert max_abs(bfm_residual(net, fs)) <= 1e-8
        assert max_abs(bim_residual(net, fs.V, fs.s)) <= 1e-8
