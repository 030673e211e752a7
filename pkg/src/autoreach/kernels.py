"""Kernel dispatch: compiled extension when available, numpy otherwise.

Set ``AUTOREACH_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("AUTOREACH_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

expm_tail = _impl.expm_tail
taylor_interval_sums = _impl.taylor_interval_sums
candidate_errors = _impl.candidate_errors
expm = _impl.expm
spectral_norm = _impl.spectral_norm
halfplane_vertices = _impl.halfplane_vertices
shrunk_zonotope_polygon = _impl.shrunk_zonotope_polygon
curvature_coefficient = _kernels_py.curvature_coefficient

__all__ = ["BACKEND", "expm_tail", "taylor_interval_sums", "candidate_errors", "curvature_coefficient", "expm",
           "spectral_norm", "halfplane_vertices", "shrunk_zonotope_polygon"]
