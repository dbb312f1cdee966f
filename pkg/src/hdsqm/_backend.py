"""Select the compiled kernels when available, else the numpy fallback.

Set ``HDSQM_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("HDSQM_PURE_PYTHON", "") not in ("", "0"):
    kernels = _kernels_py
    COMPILED = False
else:
    try:
        from . import _kernels as kernels
        COMPILED = True
    except ImportError:
        kernels = _kernels_py
        COMPILED = False

NAME = "cython" if COMPILED else "python"

PURE, MIXED, TWODOT, REDUCED = _kernels_py.PURE, _kernels_py.MIXED, _kernels_py.TWODOT, _kernels_py.REDUCED
COMPLETED, BLOWUP, UNDERFLOW, MAX_STEPS = (_kernels_py.COMPLETED, _kernels_py.BLOWUP,
                                           _kernels_py.UNDERFLOW, _kernels_py.MAX_STEPS)
