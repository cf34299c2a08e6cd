"""Kernel backend selection.

Prefers the compiled extension; falls back to numpy/scipy implementations.
Set ``QVREG_FORCE_FALLBACK=1`` to skip the compiled core (used by the
benchmark and the backend-equivalence tests).
"""

import os

from qvreg.kernels import _fallback

if os.environ.get("QVREG_FORCE_FALLBACK"):
    _impl = _fallback
else:
    try:
        from qvreg.kernels import _core as _impl
    except ImportError:
        _impl = _fallback

kahan_cumsum = _impl.kahan_cumsum
ar1_recursion = _impl.ar1_recursion
BACKEND = _impl.backend_name()

__all__ = ["kahan_cumsum", "ar1_recursion", "BACKEND"]
