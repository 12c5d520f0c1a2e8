"""Primal-dual interior-point method for conic programs in standard form.

Homogeneous self-dual embedding of

    min c^T x   s.t.  A x = b,  x in K          (primal)
    max b^T y   s.t.  c - A^T y = z,  z in K*   (dual)

with Nesterov-Todd scaling and a Mehrotra predictor-corrector.  Each
iteration factors the reduced KKT matrix

    [ H + d I    A^T ]
    [ A         -d I ]

once (``H`` is the block-diagonal NT Hessian over the conic coordinates,
zero over free coordinates; ``d`` is the static regularization) and reuses the
factorization for the predictor, the corrector and the embedding column.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cones import Free, ScalingError, make_block
from .presolve import clean_rows, ruiz
from .program import ConicProgram

log = logging.getLogger(__name__)


class Status(str, Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    ITERATION_LIMIT = "IterationLimit"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class SolverSettings:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iter: int = 200
    step_fraction: float = 0.99
    equilibrate: bool = True
    ruiz_sweeps: int = 10
    regularization: float = 1e-10
    refinement_steps: int = 2
    infeasibility_ratio: float = 1e-8   # tau/kappa threshold
    kkt: str = "auto"                   # "auto" | "dense" | "sparse"
    dense_limit: int = 1500
    verbose: bool = False


@dataclass
class SolveResult:
    status: Status
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    wall_time: float
    primal_objective: float = np.nan
    dual_objective: float = np.nan
    certificate: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class _KKT:
    """Factorization of the regularized quasi-definite system plus refinement
    against the unregularized one."""

    def __init__(self, A, H_blocks, blocks, n, settings):
        m = A.shape[0]
        reg = settings.regularization
        rows, cols, vals = [], [], []
        for blk, Hb in zip(blocks, H_blocks):
            idx = np.arange(blk.sl.start, blk.sl.stop)
            rows.append(np.repeat(idx, len(idx)))
            cols.append(np.tile(idx, len(idx)))
            vals.append(Hb.ravel())
        Acoo = A.tocoo()
        rows += [Acoo.row + n, Acoo.col]
        cols += [Acoo.col, Acoo.row + n]
        vals += [Acoo.data, Acoo.data]
        N = n + m
        K0 = sp.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(N, N),
        )
        diag = np.concatenate([np.full(n, reg), np.full(m, -reg)])
        Kreg = (K0 + sp.diags(diag)).tocsc()
        self.K0 = K0
        self.steps = settings.refinement_steps
        use_dense = settings.kkt == "dense" or (
            settings.kkt == "auto" and N <= settings.dense_limit
        )
        if use_dense:
            self._lu = sla.lu_factor(Kreg.toarray(), check_finite=False)
            self._solve = lambda r: sla.lu_solve(self._lu, r, check_finite=False)
        else:
            self._lu = spla.splu(Kreg, permc_spec="COLAMD")
            self._solve = self._lu.solve

    def solve(self, rhs):
        sol = self._solve(rhs)
        for _ in range(self.steps):
            sol = sol + self._solve(rhs - self.K0 @ sol)
        if not np.all(np.isfinite(sol)):
            raise np.linalg.LinAlgError("non-finite KKT solution")
        return sol


def solve(p: ConicProgram, settings: SolverSettings | None = None) -> SolveResult:
    """Solve ``p``; see the module docstring for the formulation."""
    st = settings or SolverSettings()
    t0 = time.perf_counter()
    n, m0 = p.n, p.m

    # zero rows whose rhs is within the feasibility tolerance are rounding noise
    pre = clean_rows(p.A, p.b, rhs_tol=st.feas_tol * (1 + np.linalg.norm(p.b)))
    if pre.inconsistent_row is not None:
        # 0 = b_i with b_i != 0: y = sign(b_i) e_i is a Farkas ray
        y = np.zeros(m0)
        y[pre.inconsistent_row] = np.sign(p.b[pre.inconsistent_row])
        return SolveResult(
            Status.PRIMAL_INFEASIBLE, np.full(n, np.nan), y, np.zeros(n),
            np.nan, np.inf, np.inf, 0, time.perf_counter() - t0,
            certificate={"y": y, "z": np.zeros(n)},
        )
    A1, b1 = pre.A, pre.b
    m = A1.shape[0]

    if st.equilibrate:
        d, e = ruiz(A1, p.cone, st.ruiz_sweeps)
    else:
        d, e = np.ones(m), np.ones(n)
    As = sp.csr_matrix(sp.diags(d) @ A1 @ sp.diags(e))
    bs = d * b1
    cs = e * p.c
    sb = max(1.0, np.abs(bs).max(initial=0.0))
    sc = max(1.0, np.abs(cs).max(initial=0.0))
    bs = bs / sb
    cs = cs / sc
    AsT = sp.csr_matrix(As.T)

    blocks = []
    for f, sl in p.cone.slices():
        if not isinstance(f, Free):
            blocks.append(make_block(f, sl))
    nu = sum(b.degree for b in blocks)

    x = np.zeros(n)
    z = np.zeros(n)
    for blk in blocks:
        x[blk.sl] = blk.identity()
        z[blk.sl] = blk.identity()
    y = np.zeros(m)
    tau = kappa = 1.0

    bnorm = np.linalg.norm(b1)
    cnorm = np.linalg.norm(p.c)
    history = []

    def unscale(x, y, z, t):
        return e * x * (sb / t), d * y * (sc / t), z / e * (sc / t)

    def expand_y(yk):
        yf = np.zeros(m0)
        yf[pre.kept_rows] = yk
        return yf

    def finish(status, it, extra=None):
        xo, yo, zo = unscale(x, y, z, tau)
        pres = np.linalg.norm(A1 @ xo - b1) / (1 + bnorm)
        dres = np.linalg.norm(p.c - A1.T @ yo - zo) / (1 + cnorm)
        pobj, dobj = float(p.c @ xo), float(b1 @ yo)
        return SolveResult(
            status, xo, expand_y(yo), zo, abs(pobj - dobj), pres, dres, it,
            time.perf_counter() - t0, pobj, dobj, extra or {}, history,
        )

    for it in range(st.max_iter + 1):
        rp = As @ x - bs * tau
        rd = cs * tau - AsT @ y - z
        rg = bs @ y - cs @ x - kappa
        xz = sum(x[b.sl] @ z[b.sl] for b in blocks)
        mu = (xz + tau * kappa) / (nu + 1)

        xo, yo, zo = unscale(x, y, z, tau)
        pres = np.linalg.norm(A1 @ xo - b1) / (1 + bnorm)
        dres = np.linalg.norm(p.c - A1.T @ yo - zo) / (1 + cnorm)
        pobj, dobj = float(p.c @ xo), float(b1 @ yo)
        gap = abs(pobj - dobj)
        history.append((it, pobj, dobj, pres, dres, tau / kappa, mu))
        if st.verbose:
            log.info("%3d %+.8e %+.8e pres %.1e dres %.1e gap %.1e tau/kap %.1e",
                     it, pobj, dobj, pres, dres, gap, tau / kappa)

        if pres <= st.feas_tol and dres <= st.feas_tol and gap <= st.gap_tol * (1 + abs(pobj)):
            return finish(Status.OPTIMAL, it)

        # infeasibility certificates from the unnormalized ray
        yr, zr = d * y * sc, z / e * sc
        xr = e * x * sb
        by, cx = float(b1 @ yr), float(p.c @ xr)
        tk_small = tau <= st.infeasibility_ratio * kappa
        if by > 0:
            yc, zc = yr / by, zr / by
            if np.linalg.norm(A1.T @ yc + zc) <= st.feas_tol or (
                tk_small and np.linalg.norm(A1.T @ yc + zc) <= np.sqrt(st.feas_tol)
            ):
                return finish(Status.PRIMAL_INFEASIBLE, it,
                              {"y": expand_y(yc), "z": zc})
        if cx < 0:
            xc = xr / -cx
            if np.linalg.norm(A1 @ xc) <= st.feas_tol or (
                tk_small and np.linalg.norm(A1 @ xc) <= np.sqrt(st.feas_tol)
            ):
                return finish(Status.DUAL_INFEASIBLE, it, {"x": xc})
        if it == st.max_iter:
            break

        try:
            scal = [blk.scale(x[blk.sl], z[blk.sl]) for blk in blocks]
            Hb = [s.H() for s in scal]
            kkt = _KKT(As, Hb, blocks, n, st)
            sol2 = kkt.solve(np.concatenate([-cs, bs]))
        except (ScalingError, np.linalg.LinAlgError, RuntimeError) as exc:
            log.debug("numerical failure at iteration %d: %s", it, exc)
            return finish(Status.NUMERICAL_FAILURE, it)
        dx2, dy2 = sol2[:n], -sol2[n:]
        denom = bs @ dy2 - cs @ dx2 + kappa / tau

        def direction(eta, rhs_s, rhs_k):
            winv_q = np.zeros(n)
            for blk, s, r in zip(blocks, scal, rhs_s):
                winv_q[blk.sl] = s.Winv(s.lam_div(r))
            sol = kkt.solve(np.concatenate([-eta * rd + winv_q, -eta * rp]))
            dx1, dy1 = sol[:n], -sol[n:]
            dtau = (-eta * rg - bs @ dy1 + cs @ dx1 + rhs_k / tau) / denom
            dx = dx1 + dtau * dx2
            dy = dy1 + dtau * dy2
            dz = np.zeros(n)
            for blk, H in zip(blocks, Hb):
                dz[blk.sl] = winv_q[blk.sl] - H @ dx[blk.sl]
            dkap = (rhs_k - kappa * dtau) / tau
            return dx, dy, dz, dtau, dkap

        def max_step(dx, dz, dtau, dkap):
            a = np.inf
            for blk in blocks:
                a = min(a, blk.max_step(x[blk.sl], dx[blk.sl]),
                        blk.max_step(z[blk.sl], dz[blk.sl]))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkap < 0:
                a = min(a, -kappa / dkap)
            return a

        try:
            lam_sq = [s.lam_sq() for s in scal]
            aff = direction(1.0, [-l for l in lam_sq], -tau * kappa)
            a_aff = min(1.0, max_step(*_pick(aff)))
            sigma = (1.0 - a_aff) ** 3
            rhs_s = []
            for blk, s, l2 in zip(blocks, scal, lam_sq):
                ds_t = s.WinvT(aff[0][blk.sl])
                dz_t = s.W(aff[2][blk.sl])
                rhs_s.append(sigma * mu * blk.identity() - l2 - blk.product(ds_t, dz_t))
            rhs_k = sigma * mu - tau * kappa - aff[3] * aff[4]
            dx, dy, dz, dtau, dkap = direction(1.0 - sigma, rhs_s, rhs_k)
        except (np.linalg.LinAlgError, RuntimeError) as exc:
            log.debug("numerical failure at iteration %d: %s", it, exc)
            return finish(Status.NUMERICAL_FAILURE, it)

        alpha = min(1.0, st.step_fraction * max_step(dx, dz, dtau, dkap))
        log.debug("it %d a_aff %.3e sigma %.3e alpha %.3e", it, a_aff, sigma, alpha)
        if not np.isfinite(alpha) or alpha <= 1e-12:
            return finish(Status.NUMERICAL_FAILURE, it)
        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        tau += alpha * dtau
        kappa += alpha * dkap

    return finish(Status.ITERATION_LIMIT, st.max_iter)


def _pick(direction):
    dx, _dy, dz, dtau, dkap = direction
    return dx, dz, dtau, dkap
