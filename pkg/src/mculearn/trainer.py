"""Empirical risk minimization: stratified batching over heterogeneous
weak-label groups, Adam updates, validation-based model selection.
"""

import csv as _csv
from dataclasses import dataclass, field

import numpy as np

from . import losses
from .datasets import LabeledDataset
from .model import make_model
from .weaklabel import MixtureWeights, WeakDataset, default_alpha, estimate_priors

ESTIMATORS = ("mcl", "mcul", "mcl_cl", "mcul_cl", "ordinary")


class ConfigurationError(ValueError):
    pass


class DivergenceError(RuntimeError):
    def __init__(self, iteration):
        super().__init__(f"non-finite risk at iteration {iteration}")
        self.iteration = iteration


@dataclass
class TrainConfig:
    estimator: str = "mcl"
    weights: MixtureWeights = None
    learning_rate: float = 1e-4
    weight_decay: float = 0.0
    batch_size: int = 100
    max_iterations: int = 1000
    nn_correction: bool = False
    nn_granularity: str = "sample"
    seed: int = 0
    model_arch: str = "linear"
    hidden: int = 500
    eval_every: int = 100

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ConfigurationError(f"unknown estimator {self.estimator!r}")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")


@dataclass
class AdamState:
    """Bias-corrected Adam accumulators, one pair per parameter block."""

    m: list
    v: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params):
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])


def adam_step(params, grads, state, lr, weight_decay=0.0):
    """One in-place Adam update. Weight decay is added to the gradients
    before the moment updates."""
    if len(params) != len(grads):
        raise ValueError("params/grads length mismatch")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError("parameter/gradient shape mismatch")
        if weight_decay:
            g = g + weight_decay * p
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state


def make_batches(strata, batch_size, rng, required=frozenset()):
    """One epoch of stratified batches.

    strata: dict name -> stratum size. Each batch draws from every nonempty
    stratum in proportion to its global size. Strata in `required` must be
    nonempty in every batch: a required stratum smaller than the epoch batch
    count is cycled with repetition (shuffled, then tiled) so each batch
    still sees at least one of its samples; all larger strata are
    partitioned, so each of their samples appears exactly once per epoch.

    Returns a list of dicts name -> index array (positions within the stratum).
    """
    sizes = {k: n for k, n in strata.items() if n > 0}
    for k in required:
        if strata.get(k, 0) == 0:
            raise ConfigurationError(f"stratum {k!r} required by the estimator is empty")
    total = sum(sizes.values())
    if total == 0:
        raise ConfigurationError("no samples to batch")
    n_batches = max(1, -(-total // batch_size))
    batches = [dict() for _ in range(n_batches)]
    for name in sorted(sizes, key=str):
        perm = rng.permutation(sizes[name])
        if name in required and sizes[name] < n_batches:
            reps = -(-n_batches // sizes[name])
            perm = np.tile(perm, reps)[:n_batches]
        for b, chunk in enumerate(np.array_split(perm, n_batches)):
            if chunk.size:
                batches[b][name] = chunk
    return batches


def _implied_labels(wd):
    """True labels recovered from full-complement sets (|cset| = K-1)."""
    full = wd.groups.get(wd.K - 1, [])
    if len(full) != sum(len(g) for g in wd.groups.values()) or wd.unlabeled:
        raise ConfigurationError("ordinary estimator needs fully determined labels")
    idx = np.array([s.feature_index for s in full])
    labels = np.array([
        (set(range(1, wd.K + 1)) - set(s.comp_set)).pop() for s in full
    ])
    return idx, labels


def _resolve_weights(wd, config):
    w = config.weights
    est = config.estimator
    if est in ("mcl", "mcul"):
        if w is None:
            w = MixtureWeights(default_alpha(wd.counts, wd.K),
                               gamma=0.1 if est == "mcul" else 0.0)
        if est == "mcl" and w.gamma != 0.0:
            w = MixtureWeights(w.alpha, gamma=0.0, pi=w.pi)
        return w
    if est in ("mcl_cl", "mcul_cl"):
        if w is None or w.pi is None:
            pi, _ = estimate_priors(wd)
            gamma = (w.gamma if w is not None else 0.1) if est == "mcul_cl" else 0.0
            alpha = w.alpha if w is not None else np.full(wd.K - 1, 1.0 / (wd.K - 1))
            w = MixtureWeights(alpha, gamma=gamma, pi=pi)
        if est == "mcl_cl" and w.gamma != 0.0:
            w = MixtureWeights(w.alpha, gamma=0.0, pi=w.pi)
        return w
    return w


def train(data, config, val_ds=None):
    """Run ERM with the configured estimator.

    data is a WeakDataset for the weak estimators or a LabeledDataset for
    estimator='ordinary' (a fully determined WeakDataset also works).
    Returns (model, history) where history rows are
    (iteration, train risk, validation accuracy); the returned model is the
    snapshot with the best validation accuracy (ties -> earliest), or the
    final iterate when no validation set is given.
    """
    est = config.estimator
    rng = np.random.default_rng(config.seed)

    if est == "ordinary":
        if isinstance(data, WeakDataset):
            idx, labels = _implied_labels(data)
            X_all, y_all, K = data.features[idx], labels, data.K
        else:
            X_all, y_all, K = data.features, data.labels, data.K
        strata = {"labeled": len(y_all)}
        weights = None
    else:
        if not isinstance(data, WeakDataset):
            raise ConfigurationError(f"estimator {est!r} requires a WeakDataset")
        weights = _resolve_weights(data, config)
        K = data.K
        group_idx = {c: np.array([s.feature_index for s in g])
                     for c, g in data.groups.items()}
        group_csets = {c: [s.comp_set for s in g] for c, g in data.groups.items()}
        u_idx = np.array([s.feature_index for s in data.unlabeled], dtype=np.int64)
        strata = {c: len(g) for c, g in data.groups.items()}
        strata["u"] = len(u_idx)
        required = set()
        if est in ("mcl", "mcul"):
            required = {c for c in range(1, K)
                        if weights.alpha[c - 1] > 0}
        else:
            required = {c for c in data.groups if len(data.groups[c])}
            if not required:
                raise ConfigurationError("no labeled groups available")
        if weights.gamma > 0:
            required.add("u")

    model = make_model(config.model_arch, data.features.shape[1], K,
                       hidden=config.hidden, seed=config.seed)
    state = AdamState.for_params(model.params)
    history = []
    best = (None, -1.0, None)  # (iteration, val acc, params snapshot)

    def record(iteration, risk):
        acc = evaluate(model, val_ds) if val_ds is not None else float("nan")
        history.append((iteration, risk, acc))
        nonlocal best
        if val_ds is not None and acc > best[1]:
            best = (iteration, acc, [p.copy() for p in model.params])

    iteration = 0
    last_risk = float("nan")
    while iteration < config.max_iterations:
        if est == "ordinary":
            batches = make_batches(strata, config.batch_size, rng, {"labeled"})
        else:
            batches = make_batches(strata, config.batch_size, rng, required)
        for batch in batches:
            if iteration >= config.max_iterations:
                break
            grads = [np.zeros_like(p) for p in model.params]
            if est == "ordinary":
                pos = batch["labeled"]
                X = X_all[pos]
                scores = model.forward(X)
                risk, dS = losses.ordinary_risk(scores, y_all[pos])
                for g, pg in zip(grads, model.backward(X, dS)):
                    g += pg
            elif est in ("mcl", "mcul"):
                batch_groups, Xs = {}, {}
                for c in (k for k in batch if k != "u"):
                    pos = batch[c]
                    Xs[c] = data.features[group_idx[c][pos]]
                    batch_groups[c] = (model.forward(Xs[c]),
                                       [group_csets[c][p] for p in pos])
                if est == "mcl":
                    bd, gmap = losses.mcl_risk(batch_groups, weights,
                                               config.nn_correction,
                                               config.nn_granularity)
                    u_grad = None
                else:
                    X_u = (data.features[u_idx[batch["u"]]]
                           if "u" in batch else np.zeros((0, data.features.shape[1])))
                    U = model.forward(X_u) if len(X_u) else None
                    bd, (gmap, u_grad) = losses.mcul_risk(
                        batch_groups, U, weights,
                        config.nn_correction, config.nn_granularity)
                risk = bd.total
                for c, dS in gmap.items():
                    for g, pg in zip(grads, model.backward(Xs[c], dS)):
                        g += pg
                if u_grad is not None and len(u_grad):
                    for g, pg in zip(grads, model.backward(X_u, u_grad)):
                        g += pg
            else:  # mcl_cl / mcul_cl
                pos_groups = [(c, batch[c]) for c in sorted(k for k in batch if k != "u")]
                X = np.concatenate([data.features[group_idx[c][pos]]
                                    for c, pos in pos_groups])
                csets = [group_csets[c][p] for c, pos in pos_groups for p in pos]
                scores = model.forward(X)
                gamma = weights.gamma if est == "mcul_cl" else 0.0
                if gamma > 0:
                    X_u = data.features[u_idx[batch["u"]]]
                    U = model.forward(X_u)
                else:
                    X_u, U = None, None
                bd, (dS, u_grad) = losses.cl_risk(
                    scores, csets, U, gamma, weights.lam,
                    config.nn_correction, config.nn_granularity)
                risk = bd.total
                for g, pg in zip(grads, model.backward(X, dS)):
                    g += pg
                if u_grad is not None and len(u_grad):
                    for g, pg in zip(grads, model.backward(X_u, u_grad)):
                        g += pg

            if not np.isfinite(risk):
                raise DivergenceError(iteration)
            adam_step(model.params, grads, state, config.learning_rate,
                      config.weight_decay)
            iteration += 1
            last_risk = risk
            if iteration % config.eval_every == 0 or iteration == config.max_iterations:
                record(iteration, risk)

    if not history and config.max_iterations == 0:
        record(0, float("nan"))
    if val_ds is not None and best[2] is not None:
        for p, snap in zip(model.params, best[2]):
            p[...] = snap
    return model, history


def evaluate(model, ds):
    """Fraction of argmax predictions matching the true labels."""
    return float(np.mean(model.predict(ds.features) == ds.labels))


def save_history(history, path):
    """Emit the training history as CSV (iteration, risk, val_accuracy)."""
    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["iteration", "risk", "val_accuracy"])
        for row in history:
            w.writerow(row)
