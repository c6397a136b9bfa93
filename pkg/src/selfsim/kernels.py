"""Kernel selection.

The compiled extension is used when it imports; otherwise the pure-Python
implementation is substituted.  Setting ``SELFSIM_PURE_PYTHON=1`` forces
the fallback (used by the benchmark and the twin-agreement tests).
"""

import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("SELFSIM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py
    else:
        BACKEND = "cython"
else:
    _impl = _kernels_py

pfq_series = _impl.pfq_series
kdf_series = _impl.kdf_series

__all__ = ["BACKEND", "pfq_series", "kdf_series"]
