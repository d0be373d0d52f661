"""Kernel backend selection.

The hot loops (theta series over many charge/sample pairs) exist twice: a
numba ``@njit`` version in :mod:`._kernels_nb` and a vectorised numpy version
in :mod:`._kernels_np`. Numba is used when it imports cleanly unless the
environment variable ``PERIODIC_MFS_DISABLE_NUMBA`` is set to a truthy value.
"""
import os

from . import _kernels_np

_FALSY = ("", "0", "false", "no", "off")


def numba_requested() -> bool:
    return os.environ.get("PERIODIC_MFS_DISABLE_NUMBA", "").strip().lower() in _FALSY


def _load():
    if numba_requested():
        try:
            from . import _kernels_nb
        except ImportError:  # numba missing or broken
            return _kernels_np, "numpy"
        return _kernels_nb, "numba"
    return _kernels_np, "numpy"


kernels, name = _load()


def use(backend: str) -> None:
    """Switch the active backend at runtime (``"numba"`` or ``"numpy"``)."""
    global kernels, name
    if backend == "numpy":
        kernels, name = _kernels_np, "numpy"
    elif backend == "numba":
        from . import _kernels_nb

        kernels, name = _kernels_nb, "numba"
    else:
        raise ValueError(f"unknown backend {backend!r}")
