"""Optimal power flow on multiphase radial networks.

Two semidefinite relaxations (bus injection and branch flow form), rank-one
recovery of voltages, an exact forward-backward sweep, a linear power-flow
approximation, and a small conic interior-point solver underneath.
"""
from .io import load_bundled, load_network, parse_network, save_network, serialize_network
from .kernels import BACKEND
from .lpf import lpf_error_report, lpf_solve
from .network import Bus, Capacitor, Composite, Line, Network, PvInverter, validate_network
from .phases import Phase, PhaseBlock, PhaseSet
from .powerflow import bfm_from_voltages, bim_residual, fbs_solve
from .relax import build_bfm_sdp, build_bim_sdp, solve_relaxation

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Bus", "Capacitor", "Composite", "Line", "Network", "PvInverter", "Phase",
    "PhaseBlock", "PhaseSet", "bfm_from_voltages", "bim_residual", "build_bfm_sdp",
    "build_bim_sdp", "fbs_solve", "load_bundled", "load_network", "lpf_error_report",
    "lpf_solve", "parse_network", "save_network", "serialize_network", "solve_relaxation",
    "validate_network",
]
