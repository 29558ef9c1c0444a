"""Backend selection for the stencil kernels.

The compiled module is used when it imports; ``HEISLAB_PURE_PYTHON=1``
forces the pure-Python reference kernels.
"""
from __future__ import annotations

import logging
import os

from . import _kernels_py

logger = logging.getLogger(__name__)

try:
    from . import _kernels as _compiled
    COMPILED_AVAILABLE = True
except ImportError:  # extension not built
    _compiled = None
    COMPILED_AVAILABLE = False

_FORCE_PURE = os.environ.get("HEISLAB_PURE_PYTHON", "") not in ("", "0")


def get_backend(name: str | None = None):
    """Return the kernel module for 'compiled', 'python' or None (auto)."""
    if name is None:
        name = "python" if (_FORCE_PURE or not COMPILED_AVAILABLE) else "compiled"
    if name == "compiled":
        if not COMPILED_AVAILABLE:
            raise ImportError("compiled kernels are not built; reinstall with a C compiler")
        return _compiled
    if name == "python":
        return _kernels_py
    raise ValueError(f"unknown kernel backend {name!r}")


def backend_name() -> str:
    return "compiled" if get_backend() is _compiled else "python"
