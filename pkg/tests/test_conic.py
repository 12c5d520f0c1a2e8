import itertools

import numpy as np
import pytest
import scipy.sparse as sp

from radialopf.conic import (ConeSpec, ConicProgram, Free, NonNeg, PsdRealSym, SecondOrder,
                             SolverSettings, Status, check_solution, smat, solve, svec)


def prog(c, A, b, factors):
    return ConicProgram(np.asarray(c, float), sp.csr_matrix(np.atleast_2d(np.asarray(A, float))),
                        np.asarray(b, float), ConeSpec(factors))


def lp_example():
    # min x  s.t.  x - s = 1, s >= 0
    return prog([1, 0], [[1, -1]], [1], [Free(1), NonNeg(1)])


def soc_example():
    # min t  s.t.  (t, u) in Q3, u = (3, 4)
    return prog([1, 0, 0], [[0, 1, 0], [0, 0, 1]], [3, 4], [SecondOrder(3)])


def psd_example():
    # min X11  s.t.  X11 = X22, X12 = 1, X psd
    rows = [svec(np.diag([1.0, -1.0])), svec(np.array([[0, 0.5], [0.5, 0]]))]
    return prog(svec(np.diag([1.0, 0.0])), rows, [0, 1], [PsdRealSym(2)])


@pytest.mark.parametrize("make, value", [(lp_example, 1.0), (soc_example, 5.0), (psd_example, 1.0)])
def test_trivial_cones(make, value):
    p = make()
    r = solve(p)
    assert r.status == Status.OPTIMAL
    assert r.iterations <= 50
    assert r.primal_objective == pytest.approx(value, abs=1e-7)
    assert abs(r.gap) <= 1e-8 * (1 + abs(r.primal_objective))
    rep = check_solution(p, r)
    assert rep.ok, rep.flags
    assert rep.gap >= -10 * 1e-8


def test_svec_round_trip(rng):
    a = rng.normal(size=(4, 4))
    m = a + a.T
    v = svec(m)
    assert len(v) == 10
    assert np.allclose(smat(v, 4), m)
    b = rng.normal(size=(4, 4))
    b = b + b.T
    assert v @ svec(b) == pytest.approx(np.trace(m @ b))


def test_primal_infeasible_certificate():
    # x - s1 = 1, x + s2 = 0 with s >= 0
    p = prog([0, 0, 0], [[1, -1, 0], [1, 0, 1]], [1, 0], [Free(1), NonNeg(2)])
    r = solve(p)
    assert r.status == Status.PRIMAL_INFEASIBLE
    y, z = r.certificate["y"], r.certificate["z"]
    assert p.b @ y == pytest.approx(1.0)
    assert np.linalg.norm(p.A.T @ y + z) <= 1e-6
    assert np.all(z[1:] >= -1e-8) and abs(z[0]) <= 1e-6


def test_inconsistent_zero_row():
    p = prog([1.0], [[0.0]], [1.0], [NonNeg(1)])
    r = solve(p)
    assert r.status == Status.PRIMAL_INFEASIBLE and r.iterations == 0


def test_dual_infeasible_certificate():
    # min -x  s.t.  x - s = 0, x, s >= 0 (unbounded)
    p = prog([-1, 0], [[1, -1]], [0], [NonNeg(2)])
    r = solve(p)
    assert r.status == Status.DUAL_INFEASIBLE
    x = r.certificate["x"]
    assert p.c @ x == pytest.approx(-1.0)
    assert np.linalg.norm(p.A @ x) <= 1e-6 and np.all(x >= -1e-8)


def vertex_optimum(c, A, b):
    """[DERIVED] best basic feasible solution by enumerating column bases."""
    m, n = A.shape
    best = np.inf
    for cols in itertools.combinations(range(n), m):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, b)
        if np.all(xb >= -1e-12):
            best = min(best, c[list(cols)] @ xb)
    return best


def random_lp(rng, n):
    m = int(rng.integers(1, n))
    A = np.vstack([np.ones(n), rng.normal(size=(m - 1, n))]) if m > 1 else np.ones((1, n))
    x0 = rng.uniform(0.1, 1.0, n)
    return rng.normal(size=n), A, A @ x0, x0


def test_random_lps_match_vertex_enumeration(rng):
    for _ in range(30):
        n = int(rng.integers(2, 5))
        c, A, b, _ = random_lp(rng, n)
        r = solve(prog(c, A, b, [NonNeg(n)]))
        assert r.status == Status.OPTIMAL
        assert r.primal_objective == pytest.approx(vertex_optimum(c, A, b), abs=1e-7)


def test_generator_point_bound(rng):
    for _ in range(20):
        n = int(rng.integers(2, 8))
        c, A, b, x0 = random_lp(rng, n)
        r = solve(prog(c, A, b, [NonNeg(n)]))
        assert r.primal_objective <= c @ x0 + 1e-8


def test_min_eigenvalue_sdp(rng):
    # [DERIVED] min <C, X> over trace-one psd X is the smallest eigenvalue of C
    for k in (2, 3, 5):
        a = rng.normal(size=(k, k))
        C = a + a.T
        p = prog(svec(C), [svec(np.eye(k))], [1.0], [PsdRealSym(k)])
        r = solve(p)
        assert r.status == Status.OPTIMAL
        assert r.primal_objective == pytest.approx(np.linalg.eigvalsh(C)[0], abs=1e-7)


def test_mixed_cones_membership(rng):
    # min t + <I, X> + sum(w) with t >= |u|, u = (1, 2), X11 = 1, w >= 0.5
    rows, b = [], []
    n = 3 + 3 + 2
    def row(entries):
        r = np.zeros(n)
        for j, v in entries:
            r[j] = v
        return r
    rows += [row([(1, 1)]), row([(2, 1)])]
    b += [1, 2]
    rows.append(row([(3, 1)]))
    b.append(1)
    rows += [row([(6, 1)]), row([(7, 1)])]
    b += [0.5, 0.7]
    c = np.concatenate([[1, 0, 0], svec(np.eye(2)), [1, 1]])
    p = prog(c, rows, b, [SecondOrder(3), PsdRealSym(2), NonNeg(2)])
    r = solve(p)
    assert r.status == Status.OPTIMAL
    assert r.primal_objective == pytest.approx(np.sqrt(5) + 1 + 1.2, abs=1e-7)
    rep = check_solution(p, r)
    assert rep.ok and min(rep.primal_margins) >= -1e-8


def test_corrupted_solution_flagged():
    p = soc_example()
    r = solve(p)
    r.x = r.x.copy()
    r.x[1] += 1.0
    rep = check_solution(p, r)
    assert not rep.ok
    assert any("primal residual" in f for f in rep.flags)


def test_deterministic():
    p = psd_example()
    a, b = solve(p), solve(p)
    assert np.array_equal(a.x, b.x) and a.history == b.history


def test_iteration_limit():
    r = solve(soc_example(), SolverSettings(max_iter=2))
    assert r.status == Status.ITERATION_LIMIT


def test_dense_and_sparse_kkt_agree():
    p = psd_example()
    a = solve(p, SolverSettings(kkt="dense"))
    b = solve(p, SolverSettings(kkt="sparse"))
    assert a.primal_objective == pytest.approx(b.primal_objective, abs=1e-8)


def test_equilibration_optional():
    r = solve(soc_example(), SolverSettings(equilibrate=False))
    assert r.status == Status.OPTIMAL and r.primal_objective == pytest.approx(5.0, abs=1e-7)


def test_dump_load_round_trip(tmp_path):
    p = psd_example()
    path = tmp_path / "p.txt"
    p.dump(path)
    q = ConicProgram.load(path)
    assert np.array_equal(p.c, q.c) and np.array_equal(p.b, q.b)
    assert (p.A != q.A).nnz == 0 and str(p.cone) == str(q.cone)
    assert q.dumps() == p.dumps()
    assert p.dumps().splitlines()[0] == "conic-program 1"


def test_dimension_checks():
    with pytest.raises(ValueError):
        prog([1, 2], [[1, 0]], [1], [NonNeg(1)])
    with pytest.raises(ValueError):
        NonNeg(0)
    with pytest.raises(ValueError):
        PsdRealSym(0)
