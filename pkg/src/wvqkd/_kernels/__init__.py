"""Kernel backend selection: compiled extension when built, numpy fallback.

The active default is chosen at import time; WVQKD_BACKEND=compiled|numpy
forces one explicitly (useful for benchmarking and equivalence tests).
"""

from __future__ import annotations

import os

from . import numpy_backend

try:
    from . import _core
except ImportError:
    _core = None

_ENV = "WVQKD_BACKEND"


def available_backends() -> tuple[str, ...]:
    return ("compiled", "numpy") if _core is not None else ("numpy",)


def get_backend(name: str | None = None):
    """Resolve a backend module by name, honoring the WVQKD_BACKEND override."""
    if name is None:
        name = os.environ.get(_ENV, "").strip().lower() or "auto"
    if name == "auto":
        return _core if _core is not None else numpy_backend
    if name == "numpy":
        return numpy_backend
    if name == "compiled":
        if _core is None:
            raise RuntimeError("compiled kernel requested but the extension is not built")
        return _core
    raise ValueError(f"unknown backend {name!r}; expected auto, compiled or numpy")


def default_backend_name() -> str:
    return get_backend().NAME
