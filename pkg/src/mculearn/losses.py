"""The risk estimators: per-sample multi-complementary loss and the four
empirical risks (size-mixture, size-mixture + unlabeled, and their
class-prior variants), each with analytic gradients w.r.t. scores.

All estimators consume precomputed score matrices, so the same code serves
the linear model, the MLP and the exact-enumeration oracles. Gradients are
of the scalar risk with respect to every score entry.
"""

from dataclasses import dataclass, field

import numpy as np

from .kernels import softmax_lse


class BatchCompositionError(ValueError):
    """A group required by the estimator weights is missing from the batch."""


@dataclass
class RiskBreakdown:
    """Diagnostic decomposition: total = unlabeled_term + sum of per-group
    contributions (exact by construction)."""

    total: float
    per_group: dict = field(default_factory=dict)
    unlabeled_term: float = 0.0


def _cset_mask(csets, n, K):
    m = np.zeros((n, K))
    for i, cs in enumerate(csets):
        for y in cs:
            m[i, y - 1] = 1.0
    return m


def _terms(G, M, csizes, K):
    """Per-sample cumulative loss L, complementary-sum S = sum_{y in cset}
    ce(g, y), and their score-gradients."""
    P, lse = softmax_lse(G)
    L = K * lse - G.sum(axis=1)
    dL = K * P - 1.0
    S = csizes * lse - (G * M).sum(axis=1)
    dS = csizes[:, None] * P - M
    return L, dL, S, dS


def mc_loss(g, cset, K):
    """Per-sample multi-complementary loss and score-gradient.

    value = L(g) - (K-1)/|cset| * sum_{y in cset} ce(g, y); may be negative.
    """
    cset = tuple(cset)
    if not 1 <= len(cset) <= K - 1:
        raise ValueError("complementary set size must be in 1..K-1")
    if len(set(cset)) != len(cset) or any(not 1 <= y <= K for y in cset):
        raise ValueError("complementary set members must be distinct classes in 1..K")
    G = np.asarray(g, dtype=np.float64)[None, :]
    M = _cset_mask([cset], 1, K)
    c = len(cset)
    L, dL, S, dS = _terms(G, M, np.array([float(c)]), K)
    coef = (K - 1) / c
    return float(L[0] - coef * S[0]), dL[0] - coef * dS[0]


def _apply_nn(values, grads, weight, granularity):
    """Absolute-value correction: per-sample |v| with sign(v) grad, or on the
    group aggregate. Returns (contribution, grads) scaled by `weight`
    (= alpha_c / n_c)."""
    if granularity == "sample":
        sign = np.sign(values)
        return weight * float(np.abs(values).sum()), weight * sign[:, None] * grads
    if granularity == "group":
        agg = weight * float(values.sum())
        s = -1.0 if agg < 0 else 1.0
        return abs(agg), s * weight * grads
    raise ValueError(f"unknown nn granularity {granularity!r}")


def mcl_risk(groups, weights, nn_correction=False, nn_granularity="sample"):
    """Empirical size-mixture risk over a batch of per-size groups.

    groups: dict c -> (scores (n_c, K), list of csets of size c).
    Returns (RiskBreakdown, dict c -> dScores).
    """
    K = weights.K
    breakdown = RiskBreakdown(0.0)
    grads = {}
    for c in range(1, K):
        a = float(weights.alpha[c - 1])
        if c not in groups:
            if a > 0:
                raise BatchCompositionError(f"alpha_{c} > 0 but group {c} is empty")
            continue
        G, csets = groups[c]
        G = np.asarray(G, dtype=np.float64)
        n_c = G.shape[0]
        M = _cset_mask(csets, n_c, K)
        L, dL, S, dS = _terms(G, M, np.full(n_c, float(c)), K)
        coef = (K - 1) / c
        v = L - coef * S
        dv = dL - coef * dS
        w = a / n_c
        if nn_correction:
            contrib, g = _apply_nn(v, dv, w, nn_granularity)
        else:
            contrib, g = w * float(v.sum()), w * dv
        breakdown.per_group[c] = contrib
        grads[c] = g
    breakdown.total = breakdown.unlabeled_term + sum(breakdown.per_group.values())
    return breakdown, grads


def mcul_risk(groups, unlabeled_scores, weights, nn_correction=False,
              nn_granularity="sample"):
    """Empirical risk mixing complementary groups with an unlabeled pool.

    The gamma fraction of the cumulative-loss term is re-estimated from the
    unlabeled pool; gamma=0 reproduces :func:`mcl_risk` bit-for-bit. The
    absolute-value correction applies to each labeled sample's combined
    term; the unlabeled term is nonnegative and left untouched.

    Returns (RiskBreakdown, (dict c -> dScores, unlabeled dScores)).
    """
    K = weights.K
    gamma = float(weights.gamma)
    breakdown = RiskBreakdown(0.0)
    grads = {}
    u_grad = None
    if gamma > 0:
        if unlabeled_scores is None or len(unlabeled_scores) == 0:
            raise BatchCompositionError("gamma > 0 requires an unlabeled batch")
        U = np.asarray(unlabeled_scores, dtype=np.float64)
        P, lse = softmax_lse(U)
        L_u = K * lse - U.sum(axis=1)
        breakdown.unlabeled_term = gamma / U.shape[0] * float(L_u.sum())
        u_grad = gamma / U.shape[0] * (K * P - 1.0)
    elif unlabeled_scores is not None and len(unlabeled_scores):
        u_grad = np.zeros_like(np.asarray(unlabeled_scores, dtype=np.float64))
    for c in range(1, K):
        a = float(weights.alpha[c - 1])
        if c not in groups:
            if a > 0:
                raise BatchCompositionError(f"alpha_{c} > 0 but group {c} is empty")
            continue
        G, csets = groups[c]
        G = np.asarray(G, dtype=np.float64)
        n_c = G.shape[0]
        M = _cset_mask(csets, n_c, K)
        L, dL, S, dS = _terms(G, M, np.full(n_c, float(c)), K)
        coef = (K - 1) / c
        t = (1.0 - gamma) * L - coef * S
        dt = (1.0 - gamma) * dL - coef * dS
        w = a / n_c
        if nn_correction:
            contrib, g = _apply_nn(t, dt, w, nn_granularity)
        else:
            contrib, g = w * float(t.sum()), w * dt
        breakdown.per_group[c] = contrib
        grads[c] = g
    breakdown.total = breakdown.unlabeled_term + sum(breakdown.per_group.values())
    return breakdown, (grads, u_grad)


def cl_risk(labeled_scores, csets, unlabeled_scores, gamma, lam,
            nn_correction=False, nn_granularity="sample"):
    """Class-prior empirical risk over a pooled labeled batch (all set sizes
    mixed, no per-size mixture weights).

    value = mean over labeled of [(1-gamma)L - lam * sum_{y in cset} ce]
            + gamma * mean over unlabeled of L.
    gamma=0 yields the prior-weighted estimator without unlabeled data.

    Returns (RiskBreakdown, (labeled dScores, unlabeled dScores)).
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    G = np.asarray(labeled_scores, dtype=np.float64)
    n = G.shape[0]
    if n == 0:
        raise BatchCompositionError("labeled pool is empty")
    K = G.shape[1]
    csizes = np.array([float(len(cs)) for cs in csets])
    M = _cset_mask(csets, n, K)
    L, dL, S, dS = _terms(G, M, csizes, K)
    t = (1.0 - gamma) * L - lam * S
    dt = (1.0 - gamma) * dL - lam * dS
    breakdown = RiskBreakdown(0.0)
    u_grad = None
    if gamma > 0:
        if unlabeled_scores is None or len(unlabeled_scores) == 0:
            raise BatchCompositionError("gamma > 0 requires an unlabeled batch")
        U = np.asarray(unlabeled_scores, dtype=np.float64)
        P, lse = softmax_lse(U)
        L_u = K * lse - U.sum(axis=1)
        breakdown.unlabeled_term = gamma / U.shape[0] * float(L_u.sum())
        u_grad = gamma / U.shape[0] * (K * P - 1.0)
    elif unlabeled_scores is not None and len(unlabeled_scores):
        u_grad = np.zeros_like(np.asarray(unlabeled_scores, dtype=np.float64))
    if nn_correction:
        contrib, g = _apply_nn(t, dt, 1.0 / n, nn_granularity)
    else:
        contrib, g = float(t.sum()) / n, dt / n
    # break the pooled contribution down by set size for diagnostics
    for c in sorted(set(int(s) for s in csizes)):
        sel = csizes == c
        if nn_correction and nn_granularity == "sample":
            breakdown.per_group[c] = float(np.abs(t[sel]).sum()) / n
        else:
            breakdown.per_group[c] = float(t[sel].sum()) / n
    if nn_correction and nn_granularity == "group":
        breakdown.per_group = {0: contrib}
    breakdown.total = breakdown.unlabeled_term + sum(breakdown.per_group.values())
    return breakdown, (g, u_grad)


def ordinary_risk(scores, labels):
    """Standard supervised empirical risk (mean softmax cross-entropy) and
    its score-gradients. Labels are 1-based."""
    G = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64) - 1
    n, K = G.shape
    P, lse = softmax_lse(G)
    value = float((lse - G[np.arange(n), y]).sum()) / n
    grad = P.copy()
    grad[np.arange(n), y] -= 1.0
    return value, grad / n
