"""Numba switch.

Hot kernels are written twice: an ``@njit`` loop version and a vectorised
numpy version.  ``DRUMCORNERS_NO_NUMBA=1`` (or numba missing) selects numpy.
Both variants stay importable so tests and benchmarks can compare them.
"""
import os

_disabled = os.environ.get("DRUMCORNERS_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and not _disabled


def njit(*args, **kwargs):
    """``numba.njit`` when numba is installed, identity otherwise.

    Compilation is lazy, so decorating costs nothing when the numpy path is
    selected.
    """
    if _numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return _numba.njit(*args, **kwargs)


def pick(numba_impl, numpy_impl):
    return numba_impl if USE_NUMBA else numpy_impl
