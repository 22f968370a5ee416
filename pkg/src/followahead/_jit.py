"""Optional numba acceleration.

Hot kernels are written once in a numba-compatible subset of Python and
decorated with :func:`njit`.  Setting ``FOLLOWAHEAD_DISABLE_NUMBA=1`` (or
running without numba installed) leaves them as plain Python functions
operating on numpy arrays.  Compiled dispatchers keep the original function
reachable as ``.py_func`` so both paths can be compared in tests.
"""

from __future__ import annotations

import os

_DISABLED = os.environ.get("FOLLOWAHEAD_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    import numba as _numba
except ImportError:
    _numba = None

NUMBA_ENABLED = _numba is not None


def njit(func=None, **options):
    """``numba.njit`` when available and enabled, identity otherwise."""
    options.setdefault("cache", True)
    if _numba is None:
        if func is None:
            return lambda f: f
        return func
    if func is None:
        return lambda f: _numba.njit(f, **options)
    return _numba.njit(func, **options)


def python_impl(func):
    """Return the uncompiled Python body of a kernel."""
    return getattr(func, "py_func", func)
