"""Optional numba acceleration.

Hot kernels are written twice: a loop-level version compiled with ``njit``
and a vectorised numpy version. ``active_backend()`` picks which one the
wrappers dispatch to (``USE_NUMBA`` sets the default). Set ``DELIVERY_ETA_DISABLE_NUMBA=1`` to force the
numpy path (numba also drops out automatically when it is not importable).
"""
import contextlib
import os

import numpy as np

_FLAG = "DELIVERY_ETA_DISABLE_NUMBA"

try:
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get(_FLAG, "").strip().lower() not in ("1", "true", "yes")


def njit(*args, **kwargs):
    """``numba.njit`` with ``cache`` and ``nogil`` on, or identity without numba."""
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    return _numba.njit(*args, **kwargs)


_active = "numba" if USE_NUMBA else "numpy"


def active_backend():
    return _active


@contextlib.contextmanager
def use_backend(name):
    """Temporarily route kernel calls to ``"numba"`` or ``"numpy"``."""
    global _active
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    prev, _active = _active, name
    try:
        yield
    finally:
        _active = prev


# splitmix64 constants; used for per-node feature sampling so that both
# backends draw the same candidate features.
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(x):
    """Vectorised splitmix64 over a uint64 array (wrapping arithmetic)."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = x + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))
