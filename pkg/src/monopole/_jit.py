"""Numba switch and thread cap.

Set ``MONOPOLE_NUMBA=0`` to run every hot loop through the numpy/scipy
fallback instead of the compiled kernels.
"""

import os

_FALSY = {"0", "false", "no", "off"}

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("MONOPOLE_NUMBA", "1").lower() not in _FALSY

numba_default = {
    "nogil": True,
    "cache": True,
    "fastmath": False,
    "boundscheck": False,
    "error_model": "numpy",
}


def njit(func):
    """Compile ``func`` with the package defaults, or return it unchanged."""
    if not USE_NUMBA:
        return func
    return numba.njit(**numba_default)(func)


def thread_cap(default=None):
    """Worker count from ``MONOPOLE_THREADS`` (None means executor default)."""
    raw = os.environ.get("MONOPOLE_THREADS")
    if raw is None:
        return default
    try:
        n = int(raw)
    except ValueError:
        return default
    return max(1, n)


def resolve_engine(engine):
    """Map an ``engine`` argument (None, 'numba', 'numpy') to a bool."""
    if engine is None:
        return USE_NUMBA
    if engine not in ("numba", "numpy"):
        raise ValueError(f"unknown engine {engine!r}")
    return engine == "numba" and numba is not None
