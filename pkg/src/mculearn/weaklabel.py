"""Generation of multi-complementarily labeled + unlabeled data from
ordinarily labeled data, and the estimator weight rules derived from it.

A complementary-label set of size c is a uniform random c-subset of the
K-1 classes the sample does not belong to; the true label is discarded
after generation.
"""

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class WeakSample:
    """One weakly labeled sample: a feature-row index plus a sorted
    complementary-label set (empty set means unlabeled)."""

    feature_index: int
    comp_set: tuple

    def __post_init__(self):
        cs = tuple(sorted(int(c) for c in self.comp_set))
        if len(set(cs)) != len(cs):
            raise ValueError("complementary-label set has duplicates")
        object.__setattr__(self, "comp_set", cs)


@dataclass(frozen=True)
class WeakDataset:
    """Samples partitioned into per-size complementary groups and an
    unlabeled pool. The only training input; true labels are gone."""

    features: np.ndarray  # (n, d)
    groups: dict  # c -> list[WeakSample], each with |comp_set| == c
    unlabeled: list  # list[WeakSample] with empty comp_set
    K: int

    def __post_init__(self):
        for c, samples in self.groups.items():
            if not 1 <= c <= self.K - 1:
                raise ValueError(f"group size {c} out of range")
            for s in samples:
                if len(s.comp_set) != c:
                    raise ValueError("group contains a set of the wrong size")
                if any(not 1 <= y <= self.K for y in s.comp_set):
                    raise ValueError("complementary label out of range")
        for s in self.unlabeled:
            if s.comp_set:
                raise ValueError("unlabeled pool contains a labeled sample")

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def counts(self):
        """n_c vector of group sizes, c = 1..K-1."""
        return np.array([len(self.groups.get(c, [])) for c in range(1, self.K)])

    @property
    def n_unlabeled(self):
        return len(self.unlabeled)


@dataclass(frozen=True)
class MixtureWeights:
    """Estimator configuration: size-mixture alpha, unlabeled trade-off gamma,
    optional class priors pi_c with derived lambda = (K-1)/sum(c*pi_c)."""

    alpha: np.ndarray
    gamma: float = 0.0
    pi: np.ndarray = None
    lam: float = field(default=None)

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=np.float64)
        if np.any(a < 0) or abs(a.sum() - 1.0) > 1e-12:
            raise ValueError("alpha must be nonnegative and sum to 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        object.__setattr__(self, "alpha", a)
        if self.pi is not None:
            p = np.asarray(self.pi, dtype=np.float64)
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
                raise ValueError("pi must be nonnegative and sum to 1")
            k = p.size + 1
            lam = (k - 1) / float(np.arange(1, k) @ p)
            if self.lam is not None and abs(self.lam - lam) > 1e-9:
                raise ValueError("lambda inconsistent with pi")
            object.__setattr__(self, "pi", p)
            object.__setattr__(self, "lam", lam)

    @property
    def K(self):
        return self.alpha.size + 1


def _uniform_subset(rng, candidates, c):
    """Uniform c-subset of `candidates` via partial Fisher-Yates."""
    pool = list(candidates)
    n = len(pool)
    for i in range(c):
        j = i + int(rng.integers(n - i))
        pool[i], pool[j] = pool[j], pool[i]
    return tuple(sorted(pool[:c]))


def weaken(ds, size_dist, unlabeled_fraction, seed, fixed_counts=None):
    """Turn a LabeledDataset into a WeakDataset.

    round(unlabeled_fraction * n) samples become unlabeled (seeded uniform
    choice); each remaining sample draws its set size c from size_dist and
    then a uniform c-subset of the K-1 non-true classes. With
    ``fixed_counts`` (length K-1), exact group sizes are used instead of
    per-sample size draws.
    """
    K = ds.K
    size_dist = np.asarray(size_dist, dtype=np.float64)
    if size_dist.shape != (K - 1,) or abs(size_dist.sum() - 1.0) > 1e-9:
        raise ValueError("size_dist must have length K-1 and sum to 1")
    if not 0.0 <= unlabeled_fraction < 1.0:
        raise ValueError("unlabeled_fraction must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    n = ds.n
    perm = rng.permutation(n)
    n_u = int(round(unlabeled_fraction * n))
    unlabeled_idx, labeled_idx = perm[:n_u], perm[n_u:]

    if fixed_counts is not None:
        fixed_counts = [int(v) for v in fixed_counts]
        if len(fixed_counts) != K - 1 or sum(fixed_counts) != labeled_idx.size:
            raise ValueError("fixed_counts must have length K-1 and sum to the labeled count")
        sizes = np.repeat(np.arange(1, K), fixed_counts)
    else:
        sizes = rng.choice(np.arange(1, K), size=labeled_idx.size, p=size_dist)

    groups = {c: [] for c in range(1, K)}
    for idx, c in zip(labeled_idx, sizes):
        y = int(ds.labels[idx])
        candidates = [k for k in range(1, K + 1) if k != y]
        cset = _uniform_subset(rng, candidates, int(c))
        groups[int(c)].append(WeakSample(int(idx), cset))
    unlabeled = [WeakSample(int(i), ()) for i in unlabeled_idx]
    groups = {c: g for c, g in groups.items() if g}
    return WeakDataset(ds.features, groups, unlabeled, K)


def default_unlabeled_fraction(n):
    """0.99 for datasets under 50000 samples, 0.995 otherwise."""
    return 0.995 if n >= 50000 else 0.99


def default_size_dist(K, mu=None):
    """Set-size distribution with entry i proportional to exp(-(i-mu)^2),
    i = 1..K-1; mu defaults to K/2."""
    if K < 2:
        raise ValueError("K must be >= 2")
    if mu is None:
        mu = K / 2.0
    i = np.arange(1, K)
    w = np.exp(-((i - mu) ** 2))
    return w / w.sum()


def default_alpha(counts, K):
    """Mixture weights alpha_c proportional to n_c / (K-c)^2, normalized;
    empty groups get weight 0."""
    counts = np.asarray(counts, dtype=np.float64)
    if counts.shape != (K - 1,) or np.any(counts < 0):
        raise ValueError("counts must be a nonnegative length-(K-1) vector")
    if not np.any(counts > 0):
        raise ValueError("all group counts are zero")
    c = np.arange(1, K)
    w = counts / (K - c) ** 2
    return w / w.sum()


def estimate_priors(wd):
    """Relative-frequency class priors pi_c over labeled groups and the
    derived lambda = (K-1)/sum(c*pi_c)."""
    counts = wd.counts.astype(np.float64)
    total = counts.sum()
    if total == 0:
        raise RuntimeError("no labeled samples to estimate priors from")
    pi = counts / total
    lam = (wd.K - 1) / float(np.arange(1, wd.K) @ pi)
    return pi, lam


def save_weak(wd, path):
    """Write a WeakDataset as JSON-lines: header {"K","d"} then one record
    per sample; empty "cset" means unlabeled. Floats survive round-trip
    exactly (shortest-repr decimals)."""
    with open(path, "w") as fh:
        fh.write(json.dumps({"K": wd.K, "d": wd.d}) + "\n")
        order = [s for c in sorted(wd.groups) for s in wd.groups[c]] + list(wd.unlabeled)
        for s in order:
            rec = {"x": list(wd.features[s.feature_index]), "cset": list(s.comp_set)}
            fh.write(json.dumps(rec) + "\n")


def load_weak(path):
    """Inverse of :func:`save_weak`."""
    with open(path) as fh:
        header = json.loads(fh.readline())
        K, d = int(header["K"]), int(header["d"])
        feats, groups, unlabeled = [], {}, []
        for i, line in enumerate(fh):
            if not line.strip():
                continue
            rec = json.loads(line)
            x = rec["x"]
            if len(x) != d:
                raise ValueError(f"record {i}: expected {d} features, got {len(x)}")
            feats.append(x)
            s = WeakSample(i, tuple(rec["cset"]))
            if s.comp_set:
                groups.setdefault(len(s.comp_set), []).append(s)
            else:
                unlabeled.append(s)
    return WeakDataset(np.array(feats, dtype=np.float64), groups, unlabeled, K)
