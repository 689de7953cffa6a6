"""Kernel acceleration switch.

Hot Monte Carlo kernels are compiled with numba unless the environment
variable ``MMFDR_NO_NUMBA`` is set (to ``1``/``true``/``yes``), in which
case the same functions run as plain numpy.  Both paths share one source;
``benchmarks/bench_mc.py`` compares them.
"""

import os


def _flag_disabled() -> bool:
    return os.environ.get("MMFDR_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}


USE_NUMBA = not _flag_disabled()

if USE_NUMBA:
    try:
        from numba import njit as _njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False

if not USE_NUMBA:
    def _njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def maybe_jit(fn):
    """Return a numba-compiled version of ``fn``, or ``fn`` itself when disabled."""
    if USE_NUMBA:
        return _njit(cache=True, fastmath=False)(fn)
    return fn
