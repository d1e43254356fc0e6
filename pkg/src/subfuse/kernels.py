"""Backend selection for the hot kernels.

The compiled extension is used when it imports; set ``SUBFUSE_PURE=1`` to
force the pure-Python fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("SUBFUSE_PURE", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

edit_distance = _impl.edit_distance
lcs_length = _impl.lcs_length
best_window = _impl.best_window
hungarian = _impl.hungarian

__all__ = ["BACKEND", "edit_distance", "lcs_length", "best_window", "hungarian"]
