"""Kernel selection: compiled DOP853 when importable, pure Python otherwise.

Set ``PERBIF_PURE_PYTHON=1`` to force the fallback.
"""
import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)

if os.environ.get("PERBIF_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        log.debug("compiled kernel unavailable; using pure-Python DOP853")
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "cython"
dop853 = _impl.dop853
advance = _impl.advance
advance_cells = _impl.advance_cells

STATUS_OK = _kernels_py.STATUS_OK
STATUS_STEP_UNDERFLOW = _kernels_py.STATUS_STEP_UNDERFLOW
STATUS_NONFINITE = _kernels_py.STATUS_NONFINITE
STATUS_MAX_STEPS = _kernels_py.STATUS_MAX_STEPS
