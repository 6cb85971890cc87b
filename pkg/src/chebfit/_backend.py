"""Kernel selection: compiled extension when importable, NumPy fallback otherwise.

Set ``CHEBFIT_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("CHEBFIT_PURE_PYTHON", "") not in ("", "0"):
    kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        kernels = _kernels_py
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
