"""Backend selection for the numeric kernels.

Set ``SPF_DISABLE_NUMBA=1`` before import to force the pure-numpy paths.
"""

import os

_FLAG = os.environ.get("SPF_DISABLE_NUMBA", "").strip().lower()

try:
    if _FLAG in ("1", "true", "yes", "on"):
        raise ImportError("numba disabled by SPF_DISABLE_NUMBA")
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise the identity decorator."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
