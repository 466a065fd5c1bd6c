"""Numba switch.

Kernels are written once as plain Python and compiled with numba when it is
importable and ``ECNSTAR_PURE_NUMPY`` is unset (or ``0``). The flag is read at
import time.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba ships with the dev env
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("ECNSTAR_PURE_NUMPY", "0").lower() not in ("1", "true", "yes")


def identity(fn):
    return fn


def jit(fn):
    """Compile ``fn`` in nopython mode, or return it untouched without numba."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=False)(fn)
