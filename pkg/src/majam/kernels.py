"""Selects the batched SINR kernel implementation at import time.

The compiled Cython extension is preferred; the numpy version is used when
the extension is missing or the ``MAJAM_PURE_PYTHON`` environment variable
is set to a non-empty value.
"""

import os

from . import _kernels_py

KernelSolveError = _kernels_py.KernelSolveError


def _load_compiled():
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


_compiled = _load_compiled()

if _compiled is not None and not os.environ.get("MAJAM_PURE_PYTHON"):
    BACKEND = "cython"
    _impl = _compiled
else:
    BACKEND = "python"
    _impl = _kernels_py


def available_backends():
    return ["python"] + (["cython"] if _compiled is not None else [])


def get_backend(name):
    """Return the kernel module called ``name`` ("python" or "cython")."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def eta_batch(pos, c0, cj, noise):
    return _impl.eta_batch(pos, c0, cj, noise)


def eta_grad_batch(pos, c0, cj, noise):
    return _impl.eta_grad_batch(pos, c0, cj, noise)
