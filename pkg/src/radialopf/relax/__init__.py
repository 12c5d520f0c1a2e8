"""Semidefinite relaxations of optimal power flow and their diagnostics."""
from .devices import device_constraints, in_region, injection_bounds_ok
from .points import (DEFAULT_THRESHOLD, bfm_point_from_state, bfm_point_from_voltages,
                     bim_point_from_voltages, combine, point_max_diff, BfmSdpPoint, BimSdpPoint, ExactnessReport, NotExact,
                     Recovered, bfm_residuals, bim_residuals, exactness_report, map_f, map_g,
                     max_residual, recover_voltages_alg1, recover_voltages_alg2)
from .sdp import (RELAXATION_SETTINGS, Relaxation, RelaxationSolution, build_bfm_sdp, build_bim_sdp, evaluate_loss,
                  loss_objective, solve_relaxation)

__all__ = [
    "DEFAULT_THRESHOLD", "BimSdpPoint", "BfmSdpPoint", "ExactnessReport", "NotExact", "Recovered",
    "bim_residuals", "bfm_residuals", "max_residual", "exactness_report", "map_f", "map_g",
    "recover_voltages_alg1", "recover_voltages_alg2", "device_constraints", "in_region",
    "injection_bounds_ok", "Relaxation", "RelaxationSolution", "build_bim_sdp", "build_bfm_sdp",
    "loss_objective", "evaluate_loss", "solve_relaxation", "RELAXATION_SETTINGS",
    "bim_point_from_voltages", "bfm_point_from_voltages", "bfm_point_from_state", "combine",
    "point_max_diff",
]
