"""Cone kernel dispatch: compiled extension when available, numpy otherwise.

Set ``UCGNA_PURE_PYTHON=1`` to force the numpy implementation.
"""
from __future__ import annotations

import os

from . import kernels_py

BACKEND = "python"
_impl = kernels_py

if os.environ.get("UCGNA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

nt_scaling = _impl.nt_scaling
scale = _impl.scale
jordan_prod = _impl.jordan_prod
jordan_div = _impl.jordan_div
max_step = _impl.max_step
min_eig = _impl.min_eig
w2_blocks = _impl.w2_blocks

__all__ = ["BACKEND", "nt_scaling", "scale", "jordan_prod", "jordan_div", "max_step", "min_eig", "w2_blocks"]
