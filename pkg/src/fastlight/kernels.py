"""Backend selection for the hot Bloch sweep.

The compiled extension is used when importable; set ``FASTLIGHT_PURE=1`` to
force the NumPy fallback (useful for benchmarking and for debugging).
"""

import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("FASTLIGHT_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
    except ImportError:  # pragma: no cover - depends on build
        _impl = _kernels_py
    else:
        BACKEND = "cython"
else:
    _impl = _kernels_py

coherence_rows = _impl.coherence_rows
weighted_sum = _impl.weighted_sum

__all__ = ["BACKEND", "coherence_rows", "weighted_sum", "_kernels_py"]
