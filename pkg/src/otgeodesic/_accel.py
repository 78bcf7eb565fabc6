"""Numba switch.

Set ``OTGEODESIC_DISABLE_NUMBA=1`` before importing the package to run every
kernel through its pure numpy / pure Python path instead.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}

NUMBA_DISABLED = os.environ.get("OTGEODESIC_DISABLE_NUMBA", "").strip().lower() not in _FALSY

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and not NUMBA_DISABLED


def njit(func=None, **options):
    """``numba.njit`` with caching on, or the identity when numba is off.

    The undecorated function stays reachable as ``.py_func`` in both cases so
    tests can run the interpreted path explicitly.
    """
    options.setdefault("cache", True)

    def wrap(f):
        if not USE_NUMBA:
            f.py_func = f
            return f
        return numba.njit(**options)(f)

    if func is None:
        return wrap
    return wrap(func)
