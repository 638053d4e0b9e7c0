"""Kernel selection.

The compiled extension is used when importable. Setting
``SYNCHRONY_BACKEND=python`` forces the numpy fallback;
``SYNCHRONY_BACKEND=compiled`` makes a missing extension an error.
"""
import os

from . import _kernels_py

_choice = os.environ.get("SYNCHRONY_BACKEND", "auto").lower()

if _choice == "python":
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        if _choice == "compiled":
            raise
        kernels = _kernels_py

BACKEND = kernels.BACKEND


def get(name: str = None):
    """Return a kernel module by name (``"python"`` or ``"compiled"``), default the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
