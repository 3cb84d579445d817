"""Numba acceleration shim.

Hot numeric kernels are compiled with numba's ``@njit`` by default. Setting
the environment variable ``DSVMSIM_NUMBA=0`` before import selects the pure
numpy/Python fallback instead (same code, interpreted), which is also used
automatically when numba is not importable. Both paths execute the identical
sequence of floating-point operations, so results are bitwise equal.
"""

import logging
import os

logger = logging.getLogger(__name__)

_env = os.environ.get("DSVMSIM_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _env not in ("0", "false", "no", "off")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False
    if NUMBA_REQUESTED:
        logger.warning("numba not importable; falling back to pure numpy kernels")

NUMBA_ENABLED = NUMBA_REQUESTED and HAVE_NUMBA


def jit_compile(func):
    """Return the njit-compiled form of ``func``, or ``func`` itself.

    fastmath stays off so compiled and interpreted kernels agree bitwise.
    """
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(func)
    return func
