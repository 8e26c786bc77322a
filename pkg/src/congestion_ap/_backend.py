"""Selection between the numba-compiled kernels and the numpy fallback.

Set ``CONGESTION_AP_DISABLE_NUMBA=1`` before import to force the pure-numpy
path. The flag is read once, at import time.
"""
import os

ENV_FLAG = "CONGESTION_AP_DISABLE_NUMBA"

NUMBA_OPTS = {"nogil": True, "cache": True}

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False


def numba_disabled_by_env() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = HAS_NUMBA and not numba_disabled_by_env()


def njit(func):
    """Compile ``func`` with numba when it is importable, else return it unchanged."""
    if not HAS_NUMBA:
        return func
    return numba.njit(**NUMBA_OPTS)(func)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
