import numpy as np

from radialopf.network import errors, validate_network
from radialopf.powerflow import bfm_residual, max_abs
from radialopf.relax import injection_bounds_ok
from radialopf.synthetic import (feeder_with_profile, forward_point, light_load_feeder,
                                 random_feeder, sample_injections)


def test_random_feeders_valid_and_ordered(rng):
    sizes = set()
    for _ in range(40):
        net = random_feeder(rng)
        sizes.add(len(net.buses))
        assert errors(validate_network(net)) == []
        assert all(ln.from_bus < ln.to_bus for ln in net.lines)
        assert all(ln.phases <= net.buses[ln.from_bus].phases for ln in net.lines)
    assert min(sizes) >= 2 and max(sizes) <= 8
    assert len(sizes) > 3


def test_mixed_phases_appear(rng):
    counts = {1: 0, 2: 0, 3: 0}
    for _ in range(30):
        for b in random_feeder(rng, 8).buses[1:]:
            counts[len(b.phases)] += 1
    assert all(v > 0 for v in counts.values())


def test_light_load_limits(rng):
    for _ in range(20):
        net = light_load_feeder(rng, 6)
        assert max(np.abs(b.load).max() for b in net.buses[1:]) <= 0.05
        assert max(np.abs(ln.z).max() for ln in net.lines) <= 0.02
        assert all(not b.devices for b in net.buses)


def test_sampled_injections_feasible(rng):
    for _ in range(10):
        net = random_feeder(rng, 6, device_prob=1.0)
        assert injection_bounds_ok(net, sample_injections(rng, net))


def test_profile_within_bounds(rng):
    for _ in range(10):
        net, s, st = feeder_with_profile(rng, 5)
        assert max_abs(bfm_residual(net, st)) <= 1e-8
        for b in net.buses[1:]:
            m = np.abs(st.V[b.id])
            assert np.all(m >= b.vmin) and np.all(m <= b.vmax)


def test_forward_point_seeded():
    a = forward_point(np.random.default_rng(5), 4)
    b = forward_point(np.random.default_rng(5), 4)
    assert all(np.array_equal(x, y) for x, y in zip(a[1], b[1]))
    assert np.array_equal(a[1][0], a[0].buses[0].v_ref)
