"""Kernel backend selection.

Hot loops exist twice: a numba ``@njit`` version and a pure numpy/Python
fallback. ``ENERSIM_BACKEND=numpy`` forces the fallback; the default is
``numba`` when it imports. The flag is read once, at import time.
"""

import os

BACKEND_ENV = "ENERSIM_BACKEND"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _resolve() -> str:
    requested = os.environ.get(BACKEND_ENV, "").strip().lower()
    if requested in ("", "numba"):
        return "numba" if HAVE_NUMBA else "numpy"
    if requested == "numpy":
        return "numpy"
    raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {requested!r}")


BACKEND = _resolve()
USE_NUMBA = BACKEND == "numba"


def njit(func):
    """Compile ``func`` with numba when available, else return it unchanged.

    The original Python function stays reachable as ``.py_func`` in both cases
    so the benchmark can time the two paths side by side.
    """
    if not HAVE_NUMBA:
        func.py_func = func
        return func
    return numba.njit(cache=True)(func)
