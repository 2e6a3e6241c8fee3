"""Optional numba acceleration for the hot simulation kernels.

Every kernel in :mod:`adaptdiff.kernels` is written once, in the subset of
Python that numba understands, and decorated with :func:`njit`.  When numba
is importable and ``ADAPTDIFF_DISABLE_NUMBA`` is unset (or ``0``), the
kernels are compiled.  Otherwise the decorator is the identity and the very
same source runs as plain Python on NumPy ``Generator`` objects.  Both paths
draw from the same bit generator in the same order, so they produce
identical output for identical seeds.
"""
import os

__all__ = [
    "DISABLED_BY_ENV",
    "USE_NUMBA",
    "njit",
    "backend",
]

_FLAG = os.environ.get("ADAPTDIFF_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no", "off")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and not DISABLED_BY_ENV


def njit(func=None, **kwargs):
    """``numba.njit`` when acceleration is enabled, identity otherwise."""
    def wrap(f):
        if USE_NUMBA:
            return numba.njit(cache=True, **kwargs)(f)
        return f

    if func is None:
        return wrap
    return wrap(func)


def backend():
    return "numba" if USE_NUMBA else "python"
