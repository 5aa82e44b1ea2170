"""Backend selection for the row-wise softmax / log-sum-exp kernel.

The compiled extension is preferred when importable; set
``MCULEARN_BACKEND=python`` to force the pure-numpy fallback (used by the
benchmark and by the backend-parity tests). Both backends produce
identical results up to f64 rounding.
"""

import os

import numpy as np

from . import _pyfallback

if os.environ.get("MCULEARN_BACKEND", "").lower() == "python":
    _impl = _pyfallback
    BACKEND = "python"
else:
    try:
        from . import _fast as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _pyfallback
        BACKEND = "python"


def softmax_lse(scores):
    """softmax(scores) row-wise and log-sum-exp per row, via the active backend."""
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    return _impl.softmax_lse(scores)


__all__ = ["softmax_lse", "BACKEND"]
