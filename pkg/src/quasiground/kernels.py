"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting
``QUASIGROUND_PURE=1`` forces the pure-Python fallback.
"""
import os

from . import _kernels_py

if os.environ.get("QUASIGROUND_PURE", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

shoot = _impl.shoot
energy_terms = _impl.energy_terms
precond_solve = _impl.precond_solve

V_HITS_ZERO = 1
DV_HITS_ZERO = -1
NO_EVENT = 0


def backends():
    """Return ``{name: module}`` for every importable backend."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
        out["cython"] = _kernels
    except ImportError:
        pass
    return out
