"""Kernel selection.

The compiled extension ``_kernels`` is used when it imports; otherwise the
pure-Python ``_kernels_py`` is used.  Setting ``RADIALOPF_PURE_PYTHON=1``
forces the fallback.
"""
import os

if os.environ.get("RADIALOPF_PURE_PYTHON", "") not in ("", "0"):
    from ._kernels_py import fbs_sweep, jacobi_eigh
    BACKEND = "python"
else:
    try:
        from ._kernels import fbs_sweep, jacobi_eigh
        BACKEND = "cython"
    except ImportError:
        from ._kernels_py import fbs_sweep, jacobi_eigh
        BACKEND = "python"

__all__ = ["BACKEND", "fbs_sweep", "jacobi_eigh"]
