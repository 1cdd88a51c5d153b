"""Kernel backend selection.

Hot inner loops (radix-2 FFT, FIR convolution, the random-number stream) have
two interchangeable implementations: a numba ``@njit`` version and a pure
numpy/Python fallback. The environment variable ``HYBRIDBLOCKS_BACKEND``
picks one at import time:

    HYBRIDBLOCKS_BACKEND=numba   use numba kernels (default when importable)
    HYBRIDBLOCKS_BACKEND=numpy   force the fallback path

Everything outside ``kernels.py`` is backend-agnostic.
"""

import os
import warnings

_requested = os.environ.get("HYBRIDBLOCKS_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    warnings.warn(
        f"HYBRIDBLOCKS_BACKEND={_requested!r} not recognized; using 'numba'",
        stacklevel=1,
    )
    _requested = "numba"

using_numba = False
if _requested == "numba":
    try:
        import numba  # noqa: F401

        using_numba = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        warnings.warn("numba not importable; falling back to numpy kernels")


def backend_name() -> str:
    return "numba" if using_numba else "numpy"
