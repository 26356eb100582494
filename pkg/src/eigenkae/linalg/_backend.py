"""Kernel selection: compiled Cython eigensolver when built, pure NumPy
otherwise. ``EIGENKAE_BACKEND=python|cython|auto`` overrides (default auto)."""

import os

from . import _kernel_py

_requested = os.environ.get("EIGENKAE_BACKEND", "auto").lower()

eig_kernel = _kernel_py.eig_kernel
_name = "python"

if _requested in ("auto", "cython"):
    try:
        from . import _kernel_cy

        eig_kernel = _kernel_cy.eig_kernel
        _name = "cython"
    except ImportError:
        if _requested == "cython":
            raise ImportError(
                "EIGENKAE_BACKEND=cython but the compiled kernel is not "
                "built; reinstall with a C compiler or use 'auto'/'python'")
elif _requested != "python":
    raise ValueError(f"unknown EIGENKAE_BACKEND value {_requested!r}")


def backend_name():
    """Name of the kernel in use: 'cython' or 'python'."""
    return _name
