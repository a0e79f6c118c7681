"""Kernel backend selection.

The compiled Cython extension is used when importable; otherwise the
numpy fallback. Override with VRDKIT_KERNELS=compiled|python, or
set_backend() at runtime (used by the backend benchmark and tests).
Both backends are bit-identical, so selection never changes results.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _corekern

    _HAVE_COMPILED = True
except ImportError:
    _corekern = None
    _HAVE_COMPILED = False

_BACKENDS = {"python": _kernels_py}
if _HAVE_COMPILED:
    _BACKENDS["compiled"] = _corekern


def _initial() -> str:
    requested = os.environ.get("VRDKIT_KERNELS", "").strip().lower()
    if requested:
        if requested not in ("compiled", "python"):
            raise ValueError(f"VRDKIT_KERNELS must be 'compiled' or 'python', got {requested!r}")
        if requested == "compiled" and not _HAVE_COMPILED:
            raise ImportError("VRDKIT_KERNELS=compiled but the extension is not built")
        return requested
    return "compiled" if _HAVE_COMPILED else "python"


_active = _initial()


def compiled_available() -> bool:
    return _HAVE_COMPILED

def active_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    if name not in _BACKENDS:
        raise ValueError(f"unknown or unavailable backend {name!r}")
    global _active
    _active = name


def get_kernels():
    return _BACKENDS[_active]
