"""Pure-Python / numpy implementations of the hot kernels.

Used when the compiled extension is unavailable (or forced via the
``QVREG_FORCE_FALLBACK`` environment variable).  Same contracts as
``kernels._core``; rounding may differ at the last ulp since the compiled
version runs a scalar loop.
"""

import math

import numpy as np
from scipy.signal import lfilter


def backend_name():
    return "fallback"


def kahan_cumsum(terms):
    """Cumulative sums of ``terms`` with Neumaier compensation.

    Returns an array of length ``len(terms) + 1`` starting at 0.
    """
    terms = np.ascontiguousarray(terms, dtype=np.float64)
    out = np.empty(terms.size + 1, dtype=np.float64)
    out[0] = 0.0
    s = 0.0
    comp = 0.0
    fabs = math.fabs
    for i, x in enumerate(terms.tolist()):
        t = s + x
        if fabs(s) >= fabs(x):
            comp += (s - t) + x
        else:
            comp += (x - t) + s
        s = t
        out[i + 1] = s + comp
    return out


def ar1_recursion(a, b, x0):
    """Linear recursion ``x[i+1] = a * x[i] + b[i]``, returned with x0 prepended."""
    b = np.ascontiguousarray(b, dtype=np.float64)
    out = np.empty(b.size + 1, dtype=np.float64)
    out[0] = x0
    if b.size:
        # y[i] = a*y[i-1] + b[i] with initial condition folded in through zi
        out[1:], _ = lfilter([1.0], [1.0, -a], b, zi=np.array([a * x0]))
    return out
