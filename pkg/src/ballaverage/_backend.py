"""Selects the assembly kernel at import time: the compiled extension when
available, else the numpy fallback. BALLAVERAGE_BACKEND=python|compiled
forces the choice."""

from __future__ import annotations

import os

_choice = os.environ.get("BALLAVERAGE_BACKEND", "auto")
if _choice not in ("auto", "compiled", "python"):
    raise ValueError(
        f"BALLAVERAGE_BACKEND must be auto, compiled or python, not {_choice!r}")

if _choice == "python":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice == "compiled":
            raise
        from . import _kernels_py as _impl  # type: ignore[no-redef]

corner_weights = _impl.corner_weights


def backend_name() -> str:
    """Which kernel implementation is active: ``compiled`` or ``python``."""
    return _impl.BACKEND_NAME
