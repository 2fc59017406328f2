"""Numba switch.

Set ``MONOLAYER_NUMBA=0`` to force the pure-numpy code paths. The flag is
read once, at import time.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("MONOLAYER_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is installed, otherwise a no-op decorator."""
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def set_threads(n):
    """Cap the BLAS/OpenMP pools at ``n`` threads.

    The jitted kernels are serial, so numba's own pool is left alone (touching
    it would spin up the threading layer for nothing).
    """
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        return
    threadpool_limits(int(n))
