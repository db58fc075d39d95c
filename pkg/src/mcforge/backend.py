"""Kernel backend selection.

The hot numeric loops (convolutions, non-uniform spectrum evaluation) exist
twice: a numba-jitted implementation in `_kernels_numba` and a pure-numpy
one in `_kernels_numpy`. The env var MCFORGE_BACKEND picks one:

    MCFORGE_BACKEND=numba   require numba (error if unavailable)
    MCFORGE_BACKEND=numpy   force the pure-numpy fallback
    unset / auto            numba when importable, numpy otherwise

MCFORGE_THREADS caps the numba thread count. Neither flag changes results:
every kernel writes disjoint output slices, so outputs are bit-identical
across thread counts and run-to-run within one backend.
"""

import os
import warnings

from .errors import ConfigError

_CHOICE = os.environ.get("MCFORGE_BACKEND", "auto").strip().lower() or "auto"
if _CHOICE not in ("auto", "numba", "numpy"):
    raise ConfigError(f"MCFORGE_BACKEND must be 'numba' or 'numpy', got {_CHOICE!r}")

kernels = None
BACKEND = None

if _CHOICE in ("auto", "numba"):
    try:
        # numba warns about old TBB versions when the parallel runtime first
        # spins up, then falls back to another threading layer; harmless.
        warnings.filterwarnings("ignore", message=".*TBB.*")
        from . import _kernels_numba as kernels

        BACKEND = "numba"
    except ImportError as exc:
        if _CHOICE == "numba":
            raise ConfigError(f"MCFORGE_BACKEND=numba but numba is unusable: {exc}")

if kernels is None:
    from . import _kernels_numpy as kernels
    BACKEND = "numpy"

if BACKEND == "numba":
    _threads = os.environ.get("MCFORGE_THREADS", "").strip()
    if _threads:
        import numba

        numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))


def active_backend():
    """Name of the kernel backend in use ('numba' or 'numpy')."""
    return BACKEND
