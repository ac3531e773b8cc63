"""Backend selection for the time-domain inner loops.

The compiled extension is preferred; the numpy fallback is used when the
extension is missing or when the environment variable ``TRACERDECONV_PURE``
is set to a non-empty value other than ``0``.
"""

import os

import numpy as np

from . import _kernels_py

_force_pure = os.environ.get("TRACERDECONV_PURE", "") not in ("", "0")

_compiled = None
if not _force_pure:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _kernels_py


def _as_c(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def convolve_direct(a, b, dt):
    """Causal direct-sum convolution truncated to ``len(a)``, scaled by ``dt``."""
    return _impl.convolve_direct(_as_c(a), _as_c(b), float(dt))


def cumulative_trapezoid(y, dt):
    """Running trapezoidal integral starting at zero."""
    return _impl.cumulative_trapezoid(_as_c(y), float(dt))


def gradient2(y, dt):
    """Second-order finite-difference derivative (central interior, one-sided ends)."""
    return _impl.gradient2(_as_c(y), float(dt))


def implementations():
    """Return ``{name: module}`` for every importable backend."""
    impls = {"python": _kernels_py}
    if _compiled is not None:
        impls["cython"] = _compiled
    return impls
