"""Kernel backend selection.

The compiled extension is used when importable; set
``NLBC_IGA_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("NLBC_IGA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py

find_spans = _impl.find_spans
basis_funs_ders = _impl.basis_funs_ders
accumulate_bilinear = _impl.accumulate_bilinear

__all__ = ["BACKEND", "find_spans", "basis_funs_ders", "accumulate_bilinear"]
