"""Kernel backend selection.

The compiled extension is used when it imports; ``DRSUBMAX_BACKEND=python``
forces the pure-Python fallback. ``set_backend`` switches at run time.
"""
import os

from . import _fallback

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

OPTIMAL = _fallback.OPTIMAL
INFEASIBLE = _fallback.INFEASIBLE
BREAKDOWN = _fallback.BREAKDOWN
KIND_QUADRATIC = _fallback.KIND_QUADRATIC
KIND_TABLE = _fallback.KIND_TABLE

impl = _fallback
BACKEND = "python"


def set_backend(name: str) -> str:
    """Select ``"compiled"`` or ``"python"``; returns the previous backend."""
    global impl, BACKEND
    previous = BACKEND
    if name == "compiled":
        if _core is None:
            raise RuntimeError("compiled kernel is not available; build the extension")
        impl = _core
    elif name == "python":
        impl = _fallback
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name
    return previous


def compiled_available() -> bool:
    return _core is not None


if _core is not None and os.environ.get("DRSUBMAX_BACKEND", "").lower() != "python":
    set_backend("compiled")
