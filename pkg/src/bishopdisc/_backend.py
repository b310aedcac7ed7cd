"""Kernel backend selection.

Prefers the compiled extension, falls back to numpy.  Set the environment
variable BISHOPDISC_FORCE_NUMPY=1 to skip the compiled module.
"""
import os

from . import _kernels_np

try:
    if os.environ.get("BISHOPDISC_FORCE_NUMPY"):
        raise ImportError("forced numpy backend")
    from . import _kernels_c as _impl
    BACKEND = "compiled"
except ImportError:
    _impl = _kernels_np
    BACKEND = "numpy"

cauchy_sum = _impl.cauchy_sum
star_sum = _impl.star_sum


def get_backend():
    """Name of the active kernel backend: 'compiled' or 'numpy'."""
    return BACKEND


def backends():
    """All importable backends as (name, module) pairs."""
    out = [("numpy", _kernels_np)]
    try:
        from . import _kernels_c
        out.append(("compiled", _kernels_c))
    except ImportError:
        pass
    return out
