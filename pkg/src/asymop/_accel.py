"""Numba switch for the hot kernels.

Set ``ASYMOP_DISABLE_NUMBA=1`` to force the pure-numpy path. The flag is read
once at import time; the numpy path is also used when numba is not installed.
"""
import os

_DISABLED = os.environ.get("ASYMOP_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by ASYMOP_DISABLE_NUMBA")
    from numba import njit
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn
        return wrap


BACKEND = "numba" if HAS_NUMBA else "numpy"
