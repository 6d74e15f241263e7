"""Hot-loop kernels with a compiled backend and a pure-Python fallback.

The compiled module is used when it was built; set ``DIVERSORT_PURE_PYTHON=1``
to force the fallback.
"""
import os

from . import _pykernels

if os.environ.get("DIVERSORT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "python" if _impl is _pykernels else "cython"
solve_dense = _impl.solve_dense
iou_matrix = _impl.iou_matrix

__all__ = ["BACKEND", "solve_dense", "iou_matrix"]
