"""Independent recomputation of a solution's quality."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cones import Free, PsdRealSym, membership_margin, smat
from .program import ConicProgram
from .solver import SolveResult, SolverSettings


@dataclass
class ResidualReport:
    primal_residual: float
    dual_residual: float
    gap: float
    relative_gap: float
    primal_margins: list = field(default_factory=list)
    dual_margins: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.flags


def _cone_tol(factor, u, tol):
    if isinstance(factor, PsdRealSym):
        lmax = np.abs(np.linalg.eigvalsh(smat(u, factor.side))).max(initial=0.0)
        return tol * max(1.0, lmax)
    return tol


def check_solution(p: ConicProgram, r: SolveResult, settings: SolverSettings | None = None) -> ResidualReport:
    """Recompute ``||Ax-b||``, ``||c-A^T y-z||``, cone margins and duality gap
    from ``(x, y, z)`` and flag every quantity that exceeds its tolerance."""
    st = settings or SolverSettings()
    x, y, z = (np.asarray(v, dtype=float) for v in (r.x, r.y, r.z))
    pres = np.linalg.norm(p.A @ x - p.b) / (1 + np.linalg.norm(p.b))
    dres = np.linalg.norm(p.c - p.A.T @ y - z) / (1 + np.linalg.norm(p.c))
    pobj, dobj = float(p.c @ x), float(p.b @ y)
    gap = pobj - dobj
    rel = abs(gap) / (1 + abs(pobj))
    rep = ResidualReport(pres, dres, gap, rel)
    if not pres <= st.feas_tol:
        rep.flags.append(f"primal residual {pres:.3e} > {st.feas_tol:g}")
    if not dres <= st.feas_tol:
        rep.flags.append(f"dual residual {dres:.3e} > {st.feas_tol:g}")
    if not rel <= st.gap_tol:
        rep.flags.append(f"relative gap {rel:.3e} > {st.gap_tol:g}")
    for k, (f, sl) in enumerate(p.cone.slices()):
        if isinstance(f, Free):
            if np.any(z[sl] != 0) and np.abs(z[sl]).max() > st.feas_tol:
                rep.flags.append(f"factor {k} ({f.code}): dual slack on free variables")
            continue
        pm = membership_margin(f, x[sl])
        dm = membership_margin(f, z[sl])
        rep.primal_margins.append(pm)
        rep.dual_margins.append(dm)
        if pm < -_cone_tol(f, x[sl], st.feas_tol):
            rep.flags.append(f"factor {k} ({f.code}): x outside cone, margin {pm:.3e}")
        if dm < -_cone_tol(f, z[sl], st.feas_tol):
            rep.flags.append(f"factor {k} ({f.code}): z outside cone, margin {dm:.3e}")
    return rep


__all__ = ["ResidualReport", "check_solution"]
