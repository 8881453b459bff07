"""Kernel backend selection.

The compiled extension ``contactnh._kernels`` is preferred when it built;
``contactnh._kernels_py`` is the drop-in fallback.  Both execute the same
tape format with bitwise identical results, so the choice only affects
speed.  Set ``CONTACT_NH_BACKEND`` to ``compiled`` or ``python`` before
import to force one side (forcing ``compiled`` on an install without the
extension raises at import time rather than silently degrading).
"""

import os

from . import _kernels_py

__all__ = ["eval_tape", "backend_name", "available_backends"]


def _load():
    choice = os.environ.get("CONTACT_NH_BACKEND", "").strip()
    if choice not in ("", "compiled", "python"):
        raise ImportError(
            f"CONTACT_NH_BACKEND={choice!r}: expected 'compiled' or 'python'"
        )
    if choice == "python":
        return _kernels_py
    try:
        from . import _kernels
        return _kernels
    except ImportError:
        if choice == "compiled":
            raise ImportError(
                "CONTACT_NH_BACKEND=compiled but the compiled kernel is "
                "not installed"
            ) from None
        return _kernels_py


_active = _load()

eval_tape = _active.eval_tape


def backend_name():
    """Name of the kernel in use: ``"compiled"`` or ``"python"``."""
    return _active.BACKEND_NAME


def available_backends():
    """Names of the kernels importable in this installation."""
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401
        names.insert(0, "compiled")
    except ImportError:
        pass
    return tuple(names)
