"""Backend selection for the hot kernels.

The compiled extension ``snmetric._kernels`` is used when importable; setting
``SNMETRIC_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _kernels_py

try:
    if os.environ.get("SNMETRIC_PURE_PYTHON", "").strip() not in ("", "0"):
        raise ImportError("pure-Python backend requested")
    from . import _kernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"

cp_curve = _impl.cp_curve
interval_maxima = _impl.interval_maxima
kahan_cumsum = _impl.kahan_cumsum

__all__ = ["BACKEND", "cp_curve", "interval_maxima", "kahan_cumsum"]
