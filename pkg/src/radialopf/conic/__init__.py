"""Self-contained interior-point solver for free/LP/SOC/PSD conic programs."""
from .check import ResidualReport, check_solution
from .cones import ConeSpec, Free, NonNeg, PsdRealSym, SecondOrder, smat, svec
from .program import ConicProgram
from .solver import SolveResult, SolverSettings, Status, solve

__all__ = [
    "ConeSpec", "Free", "NonNeg", "SecondOrder", "PsdRealSym", "svec", "smat",
    "ConicProgram", "SolverSettings", "SolveResult", "Status", "solve",
    "ResidualReport", "check_solution",
]
