"""Select between numba-compiled kernels and the pure-numpy path.

Set ``ECHOFORM_NUMBA=0`` to force numpy even when numba is installed.
"""
import os

_flag = os.environ.get("ECHOFORM_NUMBA", "1").strip().lower()
_wanted = _flag not in ("0", "false", "no", "off")

try:
    import numba
except ImportError:  # pragma: no cover - depends on environment
    numba = None

USE_NUMBA = _wanted and numba is not None


def njit(func):
    """``numba.njit`` with the project's options, or identity when disabled."""
    if numba is None:
        return func
    return numba.njit(cache=True, nogil=True, fastmath=False)(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
