"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Prints one row per kernel and problem size with the best-of-N time of each
backend and the speedup.  Both backends are checked to agree first.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from radialopf import _kernels_py as py
from radialopf.io import load_bundled
from radialopf.powerflow import _pad, _padded, flat_profile
from radialopf.synthetic import random_feeder

try:
    from radialopf import _kernels as cy
except ImportError:
    cy = None


def _hermitian_embedding(rng, k):
    a = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    h = a + a.conj().T
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def _sweep_args(net):
    frm, to, z, lmask, bmask = _padded(net)
    s = _pad(net, net.injection_floor())
    s[0] = 0
    return frm, to, z, lmask, bmask, s


def _run_sweeps(mod, args, V0, n):
    V = V0.copy()
    I = np.zeros((len(args[0]), 3), complex)
    for _ in range(n):
        mod.fbs_sweep(*args, V, I)
    return V


def bench_jacobi(repeat, sizes=(3, 6, 12)):
    rng = np.random.default_rng(0)
    rows = []
    for k in sizes:
        a = _hermitian_embedding(rng, k)
        w_py = py.jacobi_eigh(a)[0]
        t_py = min(timeit.repeat(lambda: py.jacobi_eigh(a), number=5, repeat=repeat)) / 5
        t_cy = None
        if cy is not None:
            w_cy = cy.jacobi_eigh(a)[0]
            assert np.allclose(np.sort(w_py), np.sort(w_cy), atol=1e-10)
            t_cy = min(timeit.repeat(lambda: cy.jacobi_eigh(a), number=5, repeat=repeat)) / 5
        rows.append((f"jacobi_eigh {2 * k}x{2 * k}", t_py, t_cy))
    return rows


def bench_fbs(repeat, sweeps=10):
    nets = [load_bundled("ieee13"), load_bundled("ieee123"),
            random_feeder(np.random.default_rng(1), 400, load_scale=0.002, z_scale=0.002)]
    rows = []
    for net in nets:
        args = _sweep_args(net)
        V0 = _pad(net, flat_profile(net))
        v_py = _run_sweeps(py, args, V0, sweeps)
        t_py = min(timeit.repeat(lambda: _run_sweeps(py, args, V0, sweeps), number=1,
                                 repeat=repeat)) / sweeps
        t_cy = None
        if cy is not None:
            v_cy = _run_sweeps(cy, args, V0, sweeps)
            assert np.allclose(v_py, v_cy, atol=1e-12)
            t_cy = min(timeit.repeat(lambda: _run_sweeps(cy, args, V0, sweeps), number=1,
                                     repeat=repeat)) / sweeps
        rows.append((f"fbs_sweep {len(net.buses)} buses", t_py, t_cy))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rows = bench_jacobi(args.repeat) + bench_fbs(args.repeat)
    print(f"{'kernel':<26}{'python [s]':>14}{'cython [s]':>14}{'speedup':>10}")
    for name, t_py, t_cy in rows:
        if t_cy is None:
            print(f"{name:<26}{t_py:>14.3e}{'n/a':>14}{'n/a':>10}")
        else:
            print(f"{name:<26}{t_py:>14.3e}{t_cy:>14.3e}{t_py / t_cy:>9.1f}x")
    if cy is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`")


if __name__ == "__main__":
    main()
