"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``GLOWGAN_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

import numpy as np

from . import _kernels_py as _py

_ext = None
if os.environ.get("GLOWGAN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _ext
    except ImportError:
        _ext = None

BACKEND = "cython" if _ext is not None else "numpy"
_impl = _ext if _ext is not None else _py


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _rows(v, n):
    v = np.asarray(v, dtype=np.float64)
    return _f64(np.broadcast_to(v, (n,)))


def camera_forward(r, factor, beta, gamma, impl=None):
    r = _f64(r)
    n = r.shape[0]
    return (impl or _impl).camera_forward(r, _rows(factor, n), _rows(beta, n), _rows(gamma, n))


def camera_vjp(r, factor, beta, gamma, grad_out, impl=None):
    r = _f64(r)
    n = r.shape[0]
    return (impl or _impl).camera_vjp(
        r, _rows(factor, n), _rows(beta, n), _rows(gamma, n), _f64(grad_out)
    )


def soft_mask(ldr, tau, impl=None):
    return (impl or _impl).soft_mask(_f64(ldr), float(tau))


def merge_stack(ldr, factor, beta, gamma, sat_level, impl=None):
    return (impl or _impl).merge_stack(
        _f64(ldr), _f64(factor), float(beta), float(gamma), float(sat_level)
    )


def implementations():
    """Available backends by name, for cross-checking and benchmarking."""
    out = {"numpy": _py}
    if _ext is not None:
        out["cython"] = _ext
    return out
