"""Numerically stable softmax cross-entropy primitives.

All labels are 1-based class indices in {1..K}. Everything here is a pure
function over f64 arrays; the batched risk estimators in :mod:`mculearn.losses`
are built on the same kernel.
"""

import numpy as np

from .kernels import softmax_lse


def _check_scores(g):
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("score vector must be a nonempty 1-d array")
    if not np.all(np.isfinite(g)):
        raise ValueError("score vector contains non-finite entries")
    return g


def log_sum_exp(v):
    """max(v) + ln sum exp(v - max(v)); never overflows for finite input."""
    v = _check_scores(v)
    m = v.max()
    return float(m + np.log(np.exp(v - m).sum()))


def softmax(g):
    """Softmax of a single score vector."""
    g = _check_scores(g)
    p, _ = softmax_lse(g[None, :])
    return p[0]


def softmax_ce(g, y):
    """Softmax cross-entropy loss and its score-gradient for true class y.

    Returns (loss, grad) with loss = lse(g) - g_y and grad = softmax(g) - e_y.
    """
    g = _check_scores(g)
    k = g.size
    if not 1 <= y <= k:
        raise ValueError(f"class index {y} out of range 1..{k}")
    p, lse = softmax_lse(g[None, :])
    loss = float(lse[0] - g[y - 1])
    grad = p[0].copy()
    grad[y - 1] -= 1.0
    return loss, grad


def cumulative_loss(g):
    """Label-free sum of softmax cross-entropy over all K candidate classes.

    value = K*lse(g) - sum(g); grad = K*softmax(g) - 1.
    """
    g = _check_scores(g)
    k = g.size
    p, lse = softmax_lse(g[None, :])
    value = float(k * lse[0] - g.sum())
    grad = k * p[0] - 1.0
    return value, grad
