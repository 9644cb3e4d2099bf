"""Backend selection for the Monte Carlo kernels.

The compiled extension is used when it was built; ``NOMA_PA_BACKEND=python``
forces the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_compiled = None

if os.environ.get("NOMA_PA_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None
    else:
        BACKEND = "cython"

_impl = _compiled if _compiled is not None else _kernels_py


def model2_gains(hr, hi, pr, pi):
    return _impl.model2_gains(hr, hi, pr, pi)


def count_below(gains, thresholds):
    return _impl.count_below(gains, thresholds)


def get_backend(name: str):
    """Return the kernel module for ``name`` ('cython' or 'python')."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            from . import _kernels
            return _kernels
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")
