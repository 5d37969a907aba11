"""
Numba shim.

Hot kernels are decorated with :func:`njit` from this module.  Setting the
environment variable ``SPLITSWITCH_NO_JIT=1`` before import (or running where
numba is unavailable) swaps in a passthrough decorator, so the same source runs
as plain Python over numpy arrays.  Both paths consume identical random streams
and produce identical results.
"""
import os
import warnings

_disabled = os.environ.get("SPLITSWITCH_NO_JIT", "").strip().lower() not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    from numba import njit as _numba_njit

    HAVE_JIT = True
except ImportError:
    if not _disabled:
        warnings.warn("numba is not installed - simulation kernels will be slow")
    HAVE_JIT = False
    _numba_njit = None


def njit(*args, **kw):
    if HAVE_JIT:
        return _numba_njit(*args, **kw)
    if len(args) == 1 and callable(args[0]) and not kw:
        return args[0]
    return lambda f: f


def backend_name():
    return "numba" if HAVE_JIT else "python"
