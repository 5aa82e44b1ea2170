"""Score-producing classifiers: linear-in-input with bias and a
one-hidden-layer rectifier MLP, with exact backpropagation from
score-space gradients to parameter gradients.
"""

import base64
import json

import numpy as np


class Model:
    """Parameter container with forward / backward / predict.

    ``params`` is an ordered list of f64 arrays; ``backward`` returns
    gradients in the same order, for the scalar sum over the batch of
    <dScores_i, g(x_i)>.
    """

    arch = None

    @property
    def params(self):
        raise NotImplementedError

    def forward(self, X):
        raise NotImplementedError

    def backward(self, X, dScores):
        raise NotImplementedError

    def predict(self, X):
        """Per-row argmax class (1-based); ties break toward the smallest index."""
        return np.argmax(self.forward(X), axis=1) + 1

    def copy(self):
        m = object.__new__(type(self))
        m.__dict__.update({k: v.copy() if isinstance(v, np.ndarray) else v
                           for k, v in self.__dict__.items()})
        return m


def _glorot(rng, fan_in, fan_out):
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_in, fan_out))


class LinearModel(Model):
    arch = "linear"

    def __init__(self, d, K, seed=0):
        rng = np.random.default_rng(seed)
        self.d, self.K = d, K
        self.W = _glorot(rng, d, K)
        self.b = np.zeros(K)

    @property
    def params(self):
        return [self.W, self.b]

    def forward(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.d:
            raise ValueError(f"expected {self.d} features, got {X.shape[1]}")
        return X @ self.W + self.b

    def backward(self, X, dScores):
        X = np.asarray(X, dtype=np.float64)
        dScores = np.asarray(dScores, dtype=np.float64)
        if dScores.shape != (X.shape[0], self.K):
            raise ValueError("dScores shape mismatch")
        return [X.T @ dScores, dScores.sum(axis=0)]


class MLPModel(Model):
    """d-H-K rectifier network. The rectifier subgradient at 0 is 0."""

    arch = "mlp"

    def __init__(self, d, K, hidden=500, seed=0):
        rng = np.random.default_rng(seed)
        self.d, self.K, self.hidden = d, K, hidden
        self.W1 = _glorot(rng, d, hidden)
        self.b1 = np.zeros(hidden)
        self.W2 = _glorot(rng, hidden, K)
        self.b2 = np.zeros(K)

    @property
    def params(self):
        return [self.W1, self.b1, self.W2, self.b2]

    def forward(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.d:
            raise ValueError(f"expected {self.d} features, got {X.shape[1]}")
        h = np.maximum(X @ self.W1 + self.b1, 0.0)
        return h @ self.W2 + self.b2

    def backward(self, X, dScores):
        X = np.asarray(X, dtype=np.float64)
        dScores = np.asarray(dScores, dtype=np.float64)
        if dScores.shape != (X.shape[0], self.K):
            raise ValueError("dScores shape mismatch")
        z = X @ self.W1 + self.b1
        h = np.maximum(z, 0.0)
        dW2 = h.T @ dScores
        db2 = dScores.sum(axis=0)
        dh = dScores @ self.W2.T
        dz = dh * (z > 0.0)
        return [X.T @ dz, dz.sum(axis=0), dW2, db2]


def make_model(arch, d, K, hidden=500, seed=0):
    if arch == "linear":
        return LinearModel(d, K, seed=seed)
    if arch == "mlp":
        return MLPModel(d, K, hidden=hidden, seed=seed)
    raise ValueError(f"unknown architecture {arch!r}")


_CHECKPOINT_VERSION = 1


def save_checkpoint(model, path):
    """Versioned JSON checkpoint: architecture tag, shapes and base64
    little-endian f64 payloads; bit-exact round-trip."""
    doc = {
        "version": _CHECKPOINT_VERSION,
        "arch": model.arch,
        "d": model.d,
        "K": model.K,
        "params": [
            {
                "shape": list(p.shape),
                "data": base64.b64encode(np.ascontiguousarray(p, dtype="<f8").tobytes()).decode(),
            }
            for p in model.params
        ],
    }
    if model.arch == "mlp":
        doc["hidden"] = model.hidden
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != _CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')}")
    model = make_model(doc["arch"], doc["d"], doc["K"], hidden=doc.get("hidden", 500))
    arrays = [
        np.frombuffer(base64.b64decode(p["data"]), dtype="<f8").reshape(p["shape"]).astype(np.float64)
        for p in doc["params"]
    ]
    for dst, src in zip(model.params, arrays):
        if dst.shape != src.shape:
            raise ValueError("checkpoint shape mismatch")
        dst[...] = src
    return model
