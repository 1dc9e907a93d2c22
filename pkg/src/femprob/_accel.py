"""Backend selection for the hot kernels.

Every kernel module defines a numba version and a pure-numpy version of the
same routine. ``FEMPROB_BACKEND=numpy`` (or ``FEMPROB_DISABLE_NUMBA=1``)
forces the numpy path, which is also used automatically when numba is not
importable. The flag is read once at import time.
"""

import os

try:
    from numba import njit as _numba_njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False


def _env_wants_numpy() -> bool:
    backend = os.environ.get("FEMPROB_BACKEND", "").strip().lower()
    if backend == "numpy":
        return True
    flag = os.environ.get("FEMPROB_DISABLE_NUMBA", "").strip().lower()
    return flag not in ("", "0", "false", "no")


USE_NUMBA = HAS_NUMBA and not _env_wants_numpy()
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` with caching on, or a no-op when numba is missing.

    The compiled function is always built when numba is available so the
    benchmark can compare both paths inside one process; ``pick`` decides
    which one the library actually calls.
    """
    if not HAS_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return _numba_njit(*args, **kwargs)


def pick(numba_impl, numpy_impl):
    return numba_impl if USE_NUMBA else numpy_impl
