"""Backend switch for the compiled kernels.

Every hot loop in :mod:`infoattrib._kernels` exists twice: a numba ``@njit``
version and a plain numpy/python version. Set ``INFOATTRIB_DISABLE_NUMBA=1``
(or call :func:`set_numba_enabled`) to force the pure path. Both paths must
return identical results; the test-suite runs them against each other.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None
    HAVE_NUMBA = False

ENV_FLAG = "INFOATTRIB_DISABLE_NUMBA"

_TRUTHY = {"1", "true", "yes", "on"}
_enabled = HAVE_NUMBA and os.environ.get(ENV_FLAG, "").strip().lower() not in _TRUTHY


def numba_enabled():
    return _enabled


def set_numba_enabled(flag):
    """Select the backend at runtime; returns the previous setting."""
    global _enabled
    previous = _enabled
    _enabled = bool(flag) and HAVE_NUMBA
    return previous


def njit(fn):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True)(fn)


def backend_name():
    return "numba" if _enabled else "numpy"
