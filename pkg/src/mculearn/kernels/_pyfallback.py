"""Pure-numpy fallback for the compiled softmax / log-sum-exp kernel."""

import numpy as np


def softmax_lse(scores):
    """Return (softmax rows, log-sum-exp per row) for an n x K score matrix."""
    m = scores.max(axis=1, keepdims=True)
    e = np.exp(scores - m)
    s = e.sum(axis=1, keepdims=True)
    lse = (m + np.log(s))[:, 0]
    return e / s, lse
