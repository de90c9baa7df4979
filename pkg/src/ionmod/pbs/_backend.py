"""Selects the particle-stepping kernel at import time.

The compiled extension is preferred when importable; the NumPy fallback is
bit-identical (same operations, same pre-drawn random arrays), just slower.
Set IONMOD_PBS_BACKEND=python or =compiled to force a choice.
"""
from __future__ import annotations

import os

_requested = os.environ.get("IONMOD_PBS_BACKEND", "auto").lower()

if _requested not in ("auto", "python", "compiled"):
    raise ImportError(f"IONMOD_PBS_BACKEND={_requested!r} not one of auto/python/compiled")

if _requested == "python":
    from . import _pykernel as _kernel
else:
    try:
        from . import _ckernel as _kernel  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "compiled":
            raise
        from . import _pykernel as _kernel

step_chunk = _kernel.step_chunk
BACKEND = _kernel.BACKEND


def backend_name() -> str:
    """'compiled' when the extension is active, else 'python'."""
    return BACKEND
