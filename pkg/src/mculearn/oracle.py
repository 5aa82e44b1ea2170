"""Exact verification machinery: complementary-density tables built by
enumeration over label subsets, closed-form risks over finite
distributions, Monte-Carlo convergence-rate experiments and a
finite-difference gradient checker.

Subsets are enumerated in lexicographic order and addressed by
combinatorial rank, giving a canonical dense index for the density tables.
Capacity is capped at K <= 8; the identities under test are dimension-free
so small K suffices.
"""

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from . import losses
from .kernels import softmax_lse

MAX_K = 8


def subsets(K, c):
    """All c-subsets of {1..K} in lexicographic order."""
    return [tuple(s) for s in itertools.combinations(range(1, K + 1), c)]


def subset_rank(subset, K):
    """Lexicographic rank of a sorted c-subset of {1..K} (combinatorial
    number system)."""
    c = len(subset)
    rank = 0
    prev = 0
    for pos, v in enumerate(subset):
        for skipped in range(prev + 1, v):
            rank += comb(K - skipped, c - pos - 1)
        prev = v
    return rank


def subset_unrank(rank, K, c):
    """Inverse of :func:`subset_rank`."""
    out = []
    v = 1
    for pos in range(c):
        while True:
            block = comb(K - v, c - pos - 1)
            if rank < block:
                out.append(v)
                v += 1
                break
            rank -= block
            v += 1
    return tuple(out)


@dataclass(frozen=True)
class ComplementDensity:
    """Exact joint table over (point, complementary-label set of size c):
    table[j, r] = (1 / C(K-1, c)) * sum_{y not in subset_r} p(x_j, y)."""

    c: int
    K: int
    subsets: list
    table: np.ndarray  # (m, C(K, c))


def build_complement_density(fd, c):
    """Enumerate the size-c complementary density of a FiniteDistribution.

    Also cross-checks the marginal identities the density must satisfy:
    summing over the sets avoiding class y recovers
    p(x,y) + (K-c-1)/(K-1) * sum_{y' != y} p(x,y'), and the complementary
    sum equals c/(K-1) * sum_{y' != y} p(x,y'), to 1e-12.
    """
    K = fd.K
    if K > MAX_K:
        raise ValueError(f"K={K} exceeds enumeration capacity {MAX_K}")
    if not 1 <= c <= K - 1:
        raise ValueError("set size c must be in 1..K-1")
    subs = subsets(K, c)
    denom = comb(K - 1, c)
    table = np.zeros((fd.m, len(subs)))
    for r, sub in enumerate(subs):
        outside = [y - 1 for y in range(1, K + 1) if y not in sub]
        table[:, r] = fd.joint[:, outside].sum(axis=1) / denom

    off = fd.joint.sum(axis=1, keepdims=True) - fd.joint  # sum_{y' != y} p(x, y')
    for y in range(1, K + 1):
        avoid = [r for r, sub in enumerate(subs) if y not in sub]
        hit = [r for r, sub in enumerate(subs) if y in sub]
        lhs_avoid = table[:, avoid].sum(axis=1)
        want_avoid = fd.joint[:, y - 1] + (K - c - 1) / (K - 1) * off[:, y - 1]
        lhs_hit = table[:, hit].sum(axis=1)
        want_hit = c / (K - 1) * off[:, y - 1]
        if (np.abs(lhs_avoid - want_avoid).max() > 1e-12
                or np.abs(lhs_hit - want_hit).max() > 1e-12):
            raise AssertionError("complement-density marginal identity violated")
    return ComplementDensity(c, K, subs, table)


def _ce_table(scores):
    """ce[j, y-1] = softmax cross-entropy of point j's scores at class y,
    plus the per-point cumulative loss L[j]."""
    G = np.asarray(scores, dtype=np.float64)
    K = G.shape[1]
    _, lse = softmax_lse(G)
    ce = lse[:, None] - G
    L = K * lse - G.sum(axis=1)
    return ce, L


def _subset_ce_sums(ce, subs):
    """T[j, r] = sum_{y in subset_r} ce[j, y]."""
    idx = np.array(subs) - 1
    return ce[:, idx].sum(axis=2) if idx.size else np.zeros((ce.shape[0], 0))


def exact_risks(fd, scores, weights):
    """All risks as exact finite expectations over the density tables.

    Returns a dict with keys 'R' (supervised risk), 'R_c' (per set size),
    'R_mcl', 'R_mcul', 'R_mcl_cl', 'R_mcul_cl'.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (fd.m, fd.K):
        raise ValueError("need one score vector per support point")
    K = fd.K
    gamma = weights.gamma
    ce, L = _ce_table(scores)
    px = fd.point_marginal()
    R = float((fd.joint * ce).sum())
    EL = float(px @ L)

    R_c, R_cu = {}, {}
    mix_val = 0.0  # E_{pbar}[L - lam * sum ce]  pieces, accumulated per c
    mix_val_g = 0.0  # E_{pbar}[(1-gamma)L - lam * sum ce]
    lam = weights.lam if weights.pi is not None else None
    for c in range(1, K):
        cd = build_complement_density(fd, c)
        T = _subset_ce_sums(ce, cd.subsets)
        coef = (K - 1) / c
        val = (cd.table * (L[:, None] - coef * T)).sum()
        R_c[c] = float(val)
        R_cu[c] = float((cd.table * ((1 - gamma) * L[:, None] - coef * T)).sum()
                        + gamma * EL)
        if lam is not None:
            pi_c = weights.pi[c - 1]
            mix_val += pi_c * (cd.table * (L[:, None] - lam * T)).sum()
            mix_val_g += pi_c * (cd.table * ((1 - gamma) * L[:, None] - lam * T)).sum()

    alpha = weights.alpha
    out = {
        "R": R,
        "R_c": R_c,
        "R_mcl": float(sum(alpha[c - 1] * R_c[c] for c in R_c)),
        "R_mcul": float(sum(alpha[c - 1] * R_cu[c] for c in R_cu)),
    }
    if lam is not None:
        out["R_mcl_cl"] = float(mix_val)
        out["R_mcul_cl"] = float(mix_val_g + gamma * EL)
    return out


def sample_weak(fd, n, weights, rng, unlabeled_fraction=0.0):
    """Draw n samples from the finite distribution's generative process:
    (x, y) ~ joint, then either unlabeled or a complementary set whose size
    follows `weights.alpha` and whose members are a uniform subset of the
    non-true classes.

    Returns (point indices per group, subset-rank per group, unlabeled
    point indices) with groups keyed by set size.
    """
    K = fd.K
    flat = fd.joint.ravel()
    draw = rng.choice(flat.size, size=n, p=flat)
    pts, ys = draw // K, draw % K + 1
    n_u = int(round(unlabeled_fraction * n))
    u_pts = pts[:n_u]
    pts, ys = pts[n_u:], ys[n_u:]
    sizes = rng.choice(np.arange(1, K), size=pts.size, p=weights.alpha)
    groups = {}
    for c in range(1, K):
        sel = sizes == c
        if not sel.any():
            continue
        subs = subsets(K, c)
        # valid[y-1] lists ranks of subsets avoiding class y
        valid = np.array([[r for r, s in enumerate(subs) if y not in s]
                          for y in range(1, K + 1)])
        pick = rng.integers(valid.shape[1], size=int(sel.sum()))
        ranks = valid[ys[sel] - 1, pick]
        groups[c] = (pts[sel], ranks)
    return groups, u_pts


def _empirical_risk(fd, scores, estimator, groups, u_pts, weights, ce, L):
    K = fd.K
    total = 0.0
    if estimator == "ordinary":
        pts, ys = groups  # (point indices, labels) in this mode
        return float(ce[pts, ys - 1].mean())
    gamma = weights.gamma if estimator in ("mcul", "mcul_cl") else 0.0
    if estimator in ("mcl", "mcul"):
        for c, (pts, ranks) in groups.items():
            a = weights.alpha[c - 1]
            if a == 0:
                continue
            T = _subset_ce_sums(ce, subsets(K, c))
            coef = (K - 1) / c
            term = (1 - gamma) * L[pts] - coef * T[pts, ranks]
            total += a * term.mean()
        if gamma > 0:
            total += gamma * L[u_pts].mean()
        return float(total)
    # class-prior estimators: pooled over all labeled samples
    vals = []
    lam = weights.lam
    for c, (pts, ranks) in groups.items():
        T = _subset_ce_sums(ce, subsets(K, c))
        vals.append((1 - gamma) * L[pts] - lam * T[pts, ranks])
    pooled = np.concatenate(vals)
    total = pooled.mean()
    if gamma > 0:
        total += gamma * L[u_pts].mean()
    return float(total)


def mc_convergence(fd, scores, estimator, n_grid, trials, seed, weights,
                   unlabeled_fraction=0.5):
    """Mean absolute estimation error versus sample size, with a least
    squares log-log slope fit.

    Returns (rows, slope) where rows are (n, mean |estimate - exact risk|).
    """
    n_grid = [int(n) for n in n_grid]
    if (len(n_grid) < 4 or any(b <= a for a, b in zip(n_grid, n_grid[1:]))
            or n_grid[-1] < 100 * n_grid[0]):
        raise ValueError("n grid must be increasing, >= 4 points, spanning >= 2 decades")
    if trials < 1:
        raise ValueError("trials must be positive")
    ce, L = _ce_table(np.asarray(scores, dtype=np.float64))
    exact = exact_risks(fd, scores, weights)
    target = {"ordinary": exact["R"], "mcl": exact["R_mcl"],
              "mcul": exact["R_mcul"], "mcl_cl": exact.get("R_mcl_cl"),
              "mcul_cl": exact.get("R_mcul_cl")}[estimator]
    uf = unlabeled_fraction if estimator in ("mcul", "mcul_cl") else 0.0
    errs = np.zeros(len(n_grid))
    rng = np.random.default_rng(seed)
    flat = fd.joint.ravel()
    for t in range(trials):
        for i, n in enumerate(n_grid):
            if estimator == "ordinary":
                draw = rng.choice(flat.size, size=n, p=flat)
                groups, u_pts = (draw // fd.K, draw % fd.K + 1), None
            else:
                while True:
                    groups, u_pts = sample_weak(fd, n, weights, rng, uf)
                    need = {c for c in range(1, fd.K) if weights.alpha[c - 1] > 0}
                    if need <= set(groups) and (uf == 0 or len(u_pts)):
                        break
            est = _empirical_risk(fd, scores, estimator, groups, u_pts,
                                  weights, ce, L)
            errs[i] += abs(est - target)
    errs /= trials
    slope = float(np.polyfit(np.log(n_grid), np.log(errs), 1)[0])
    return list(zip(n_grid, errs.tolist())), slope


def fd_gradient_check(loss, point, h=1e-5):
    """Max guarded relative error between the analytic gradient of
    ``loss(x) -> (value, grad)`` and central finite differences."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(point, dtype=np.float64).copy()
    _, grad = loss(x)
    grad = np.asarray(grad, dtype=np.float64).ravel()
    flat = x.ravel()
    num = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        plus, _ = loss(x)
        flat[i] = orig - h
        minus, _ = loss(x)
        flat[i] = orig
        num[i] = (plus - minus) / (2 * h)
    denom = np.maximum(np.maximum(np.abs(num), np.abs(grad)), 1e-3)
    return float(np.max(np.abs(num - grad) / denom))


def verify_unbiasedness(Ks=(2, 3, 4, 5, 6), configs=50, tol=1e-10, seed=0,
                        m_points=5):
    """The flagship identity suite: for each K and seeded random
    (distribution, scores, alpha, gamma, pi) configuration, every exact
    risk rewrite must match the supervised risk within `tol`.

    Returns a JSON-able report with per-identity max deviations.
    """
    from .datasets import synth_mixture
    from .weaklabel import MixtureWeights

    rng = np.random.default_rng(seed)
    report = {"tol": tol, "per_K": {}, "passed": True}
    for K in Ks:
        dev = {"R_c": 0.0, "R_mcl": 0.0, "R_mcul": 0.0,
               "R_mcl_cl": 0.0, "R_mcul_cl": 0.0}
        for _ in range(configs):
            fd = synth_mixture(K, 2, m_points, int(rng.integers(2**32)))
            scores = rng.uniform(-3, 3, size=(m_points, K))
            alpha = rng.dirichlet(np.ones(K - 1))
            pi = rng.dirichlet(np.ones(K - 1))
            gamma = float(rng.uniform(0, 1))
            w = MixtureWeights(alpha, gamma=gamma, pi=pi)
            r = exact_risks(fd, scores, w)
            for c, v in r["R_c"].items():
                dev["R_c"] = max(dev["R_c"], abs(v - r["R"]))
            for key in ("R_mcl", "R_mcul", "R_mcl_cl", "R_mcul_cl"):
                dev[key] = max(dev[key], abs(r[key] - r["R"]))
        report["per_K"][K] = {k: float(v) for k, v in dev.items()}
        if max(dev.values()) > tol:
            report["passed"] = False
    return report
