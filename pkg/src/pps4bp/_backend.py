"""Kernel selection: the compiled core when importable, else pure Python."""

import logging

log = logging.getLogger(__name__)

try:
    from . import _core as _compiled
except ImportError:  # extension not built
    _compiled = None
    log.info("compiled core unavailable; using the pure-Python kernels")

from . import _fallback

BACKENDS = {"python": _fallback}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

_active = _compiled if _compiled is not None else _fallback


def active():
    return _active


def name():
    return "compiled" if _active is _compiled and _compiled is not None else "python"


def get(backend=None):
    """Return the kernel module for ``backend`` (None means the active one)."""
    if backend is None:
        return _active
    try:
        return BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {backend!r}; have {sorted(BACKENDS)}") from None


def use(backend):
    """Switch the process-wide default kernel module."""
    global _active
    _active = get(backend)
    return _active


KernelErrors = tuple({_fallback.KernelError, getattr(_compiled, "KernelError", _fallback.KernelError)})
