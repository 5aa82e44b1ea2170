"""Dataset containers, loaders (CSV / IDX), splits and synthetic finite
distributions used by the exact-enumeration oracles.
"""

import csv
import gzip
import struct
from dataclasses import dataclass

import numpy as np


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledDataset:
    """Dense feature matrix with 1-based true labels."""

    features: np.ndarray  # (n, d) f64
    labels: np.ndarray  # (n,) int, values in 1..K
    K: int

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if f.ndim != 2 or f.shape[0] < 1:
            raise ValueError("features must be a nonempty n x d matrix")
        if y.shape != (f.shape[0],):
            raise ValueError("labels must align with feature rows")
        if not np.all(np.isfinite(f)):
            raise ValueError("features contain non-finite entries")
        if y.min() < 1 or y.max() > self.K:
            raise ValueError("labels must lie in 1..K")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", y)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]


@dataclass(frozen=True)
class FiniteDistribution:
    """Explicit joint density table p(x_j, y) over m feature points."""

    points: np.ndarray  # (m, d)
    joint: np.ndarray  # (m, K), nonnegative, sums to 1

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        j = np.asarray(self.joint, dtype=np.float64)
        if j.ndim != 2 or pts.shape[0] != j.shape[0]:
            raise ValueError("points and joint table must share the first axis")
        if np.any(j < 0):
            raise ValueError("joint probabilities must be nonnegative")
        if abs(j.sum() - 1.0) > 1e-12:
            raise ValueError("joint table must sum to 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "joint", j)

    @property
    def m(self):
        return self.joint.shape[0]

    @property
    def K(self):
        return self.joint.shape[1]

    def point_marginal(self):
        """p(x_j), marginalized over labels."""
        return self.joint.sum(axis=1)


def _is_float(tok):
    try:
        float(tok)
        return True
    except ValueError:
        return False


def load_csv(path, label_column, K):
    """Load a UCI-style CSV into a LabeledDataset.

    A non-numeric first row is treated as a header. Original labels are
    remapped to 1..K by their sorted order; the file must contain exactly K
    distinct labels. Errors name the offending 1-based line number.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            rows.append((lineno, row))
    if not rows:
        raise ParseError(f"{path}: empty file")
    start = 0
    if any(not _is_float(tok) for tok in rows[0][1]):
        start = 1
    if start == len(rows):
        raise ParseError(f"{path}: no data rows")
    arity = len(rows[start][1])
    if not 0 <= label_column < arity:
        raise ParseError(f"{path}: label column {label_column} out of range")
    feats, raw_labels = [], []
    for lineno, row in rows[start:]:
        if len(row) != arity:
            raise ParseError(f"{path}:{lineno}: expected {arity} fields, got {len(row)}")
        try:
            vals = [float(tok) for tok in row]
        except ValueError:
            raise ParseError(f"{path}:{lineno}: non-numeric cell") from None
        lab = row[label_column]
        try:
            raw_labels.append(int(float(lab)) if float(lab) == int(float(lab)) else lab)
        except ValueError:
            raise ParseError(f"{path}:{lineno}: non-integer label {lab!r}") from None
        del vals[label_column]
        feats.append(vals)
    uniq = sorted(set(raw_labels))
    if len(uniq) != K:
        raise ParseError(f"{path}: found {len(uniq)} distinct labels, expected K={K}")
    remap = {lab: i + 1 for i, lab in enumerate(uniq)}
    labels = np.array([remap[lab] for lab in raw_labels], dtype=np.int64)
    return LabeledDataset(np.array(feats, dtype=np.float64), labels, K)


def save_csv(ds, path, label_column=None):
    """Write a LabeledDataset as CSV (label appended as last column by default).

    Floats use Python repr (shortest round-trip decimal) so reloads are
    bit-equal.
    """
    if label_column is None:
        label_column = ds.d
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for i in range(ds.n):
            row = [repr(float(v)) for v in ds.features[i]]
            row.insert(label_column, str(int(ds.labels[i])))
            w.writerow(row)


_IDX_IMAGES_MAGIC = 0x00000803
_IDX_LABELS_MAGIC = 0x00000801


def _open_maybe_gz(path):
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"\x1f\x8b":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_idx(path, expect_magic):
    with _open_maybe_gz(path) as fh:
        header = fh.read(4)
        if len(header) < 4:
            raise ParseError(f"{path}: truncated header")
        (magic,) = struct.unpack(">I", header)
        if magic != expect_magic:
            raise ParseError(f"{path}: bad magic 0x{magic:08x}, expected 0x{expect_magic:08x}")
        ndim = magic & 0xFF
        dims_raw = fh.read(4 * ndim)
        if len(dims_raw) < 4 * ndim:
            raise ParseError(f"{path}: truncated dimension header")
        dims = struct.unpack(f">{ndim}I", dims_raw)
        count = int(np.prod(dims))
        payload = fh.read(count)
        if len(payload) < count:
            raise ParseError(f"{path}: truncated payload ({len(payload)} of {count} bytes)")
        return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def load_idx(images_path, labels_path):
    """Load an MNIST-family IDX image/label file pair.

    Features are scaled to [0, 1] by dividing by 255; labels are remapped to
    1..K by sorted order (0..9 becomes 1..10 for MNIST).
    """
    images = _read_idx(images_path, _IDX_IMAGES_MAGIC)
    labels = _read_idx(labels_path, _IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise ParseError(
            f"image count {images.shape[0]} != label count {labels.shape[0]}"
        )
    feats = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    uniq = np.sort(np.unique(labels))
    remap = np.zeros(int(uniq.max()) + 1, dtype=np.int64)
    remap[uniq] = np.arange(1, uniq.size + 1)
    return LabeledDataset(feats, remap[labels.astype(np.int64)], int(uniq.size))


def split(ds, ratio, seed):
    """Deterministic seeded split into (round(ratio*n), rest) disjoint parts."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be in (0, 1)")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(ds.n)
    n1 = int(round(ratio * ds.n))
    idx1, idx2 = np.sort(perm[:n1]), np.sort(perm[n1:])
    part = lambda idx: LabeledDataset(ds.features[idx], ds.labels[idx], ds.K)
    return part(idx1), part(idx2)


def minmax_scale(ds):
    """Per-feature min-max scaling to [0, 1]; constant features map to 0."""
    lo = ds.features.min(axis=0)
    hi = ds.features.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return LabeledDataset((ds.features - lo) / span, ds.labels, ds.K)


def synth_blobs(K, d, n, seed, sep=3.0):
    """Seeded Gaussian-cluster LabeledDataset (balanced classes, unit
    covariance, class means drawn on a sphere of radius `sep`)."""
    rng = np.random.default_rng(seed)
    means = rng.standard_normal((K, d))
    means *= sep / np.linalg.norm(means, axis=1, keepdims=True)
    labels = rng.integers(1, K + 1, size=n)
    feats = means[labels - 1] + rng.standard_normal((n, d))
    return LabeledDataset(feats, labels, K)


def synth_mixture(K, d, m_points, seed):
    """Seeded synthetic FiniteDistribution: Gaussian points, uniform-random
    joint table normalized to sum 1. Every class gets positive total mass."""
    if K < 2 or m_points < 1:
        raise ValueError("need K >= 2 and m_points >= 1")
    rng = np.random.default_rng(seed)
    points = rng.standard_normal((m_points, d))
    joint = rng.uniform(0.1, 1.0, size=(m_points, K))
    joint /= joint.sum()
    return FiniteDistribution(points, joint)
