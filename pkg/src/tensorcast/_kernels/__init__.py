"""Backend selection for the Monte Carlo hot loops.

The compiled extension is preferred when importable; the numpy fallback
produces bit-identical output (same counter-based draws, same update
expressions).  Set TENSORCAST_BACKEND=python or =cython to force one.
"""

import os

from . import mc_py

_choice = os.environ.get("TENSORCAST_BACKEND", "auto").lower()
if _choice not in ("auto", "cython", "python"):
    raise ValueError(f"TENSORCAST_BACKEND must be auto, cython or python, not {_choice!r}")

if _choice in ("auto", "cython"):
    try:
        from . import _mc_cy as _impl
    except ImportError:
        if _choice == "cython":
            raise
        _impl = mc_py
else:
    _impl = mc_py

BACKEND = _impl.BACKEND_NAME

normals_block = _impl.normals_block
gbm_chunk = _impl.gbm_chunk
ou_chunk = _impl.ou_chunk
coupled_chunk = _impl.coupled_chunk
philox4x32_10 = _impl.philox4x32_10
ndtri = _impl.ndtri


def get_backend(name: str = "active"):
    """Return a kernel module by name: 'active', 'python' or 'cython'."""
    if name == "active":
        return _impl
    if name == "python":
        return mc_py
    if name == "cython":
        from . import _mc_cy

        return _mc_cy
    raise ValueError(f"unknown backend {name!r}")
