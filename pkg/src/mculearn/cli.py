"""Command-line entry point wiring the library into reproducible
experiments.

Configuration is a single JSON document with a top-level "seed"; flags
override config keys. Exit codes: 0 success, 2 config error, 3 training
divergence, 4 verification failure.
"""

import hashlib
import json
import os
import sys

import click
import numpy as np

from . import datasets, oracle, trainer, weaklabel
from .model import load_checkpoint, save_checkpoint
from .weaklabel import MixtureWeights

EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_VERIFY = 4


class ConfigError(click.ClickException):
    exit_code = EXIT_CONFIG


def _load_config(path, overrides):
    cfg = {}
    if path:
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}")
    for k, v in overrides.items():
        if v is not None:
            cfg[k] = v
    return cfg


def _config_hash(cfg):
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True, default=str).encode()
    ).hexdigest()[:16]


def _load_dataset(cfg):
    ds_cfg = cfg.get("dataset")
    if not ds_cfg:
        raise ConfigError("config is missing a 'dataset' section")
    src = ds_cfg.get("source")
    try:
        if src == "csv":
            ds = datasets.load_csv(ds_cfg["path"], int(ds_cfg.get("label_column", 0)),
                                   int(ds_cfg["K"]))
            if ds_cfg.get("minmax", True):
                ds = datasets.minmax_scale(ds)
            return ds
        if src == "idx":
            return datasets.load_idx(ds_cfg["images"], ds_cfg["labels"])
        if src == "synthetic":
            return datasets.synth_blobs(int(ds_cfg.get("K", 3)), int(ds_cfg.get("d", 2)),
                                        int(ds_cfg.get("n", 1000)), int(cfg.get("seed", 0)),
                                        sep=float(ds_cfg.get("sep", 3.0)))
    except (OSError, KeyError, ValueError) as e:
        raise ConfigError(f"dataset load failed: {e}")
    raise ConfigError(f"unknown dataset source {src!r}")


def _weaken_from_config(ds, cfg, seed):
    wk = cfg.get("weaken", {})
    sd = wk.get("size_dist")
    size_dist = (np.asarray(sd, dtype=float) if sd is not None
                 else weaklabel.default_size_dist(ds.K, wk.get("mu")))
    uf = wk.get("unlabeled_fraction")
    if uf is None:
        uf = 0.0
    return weaklabel.weaken(ds, size_dist, float(uf), seed,
                            fixed_counts=wk.get("fixed_counts"))


def _train_config(cfg, seed):
    tr = dict(cfg.get("train", {}))
    gamma = float(tr.pop("gamma", 0.1))
    arch = tr.pop("model", "linear")
    try:
        return trainer.TrainConfig(
            estimator=tr.get("estimator", "mcl"),
            learning_rate=float(tr.get("learning_rate", 1e-4)),
            weight_decay=float(tr.get("weight_decay", 0.0)),
            batch_size=int(tr.get("batch_size", 100)),
            max_iterations=int(tr.get("max_iterations", 1000)),
            nn_correction=bool(tr.get("nn_correction", False)),
            nn_granularity=tr.get("nn_granularity", "sample"),
            seed=seed,
            model_arch=arch,
            hidden=int(tr.get("hidden", 500)),
            eval_every=int(tr.get("eval_every", 100)),
        ), gamma
    except (trainer.ConfigurationError, ValueError) as e:
        raise ConfigError(str(e))


def _resolve_train_weights(wd, tcfg, gamma):
    if tcfg.estimator == "ordinary":
        return None
    alpha = weaklabel.default_alpha(wd.counts, wd.K)
    pi = None
    if tcfg.estimator in ("mcl_cl", "mcul_cl"):
        pi, _ = weaklabel.estimate_priors(wd)
    g = gamma if tcfg.estimator in ("mcul", "mcul_cl") else 0.0
    return MixtureWeights(alpha, gamma=g, pi=pi)


def _write_manifest(out, cfg, seed):
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "run.json"), "w") as fh:
        json.dump({"config_hash": _config_hash(cfg), "seed": seed, "config": cfg},
                  fh, indent=2, default=str)


@click.group()
def main():
    """Multi-complementary-label / unlabeled learning toolkit."""


@main.command("gen-weak")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default="out")
@click.option("--unlabeled-fraction", type=float, default=None)
def gen_weak(config_path, seed, out, unlabeled_fraction):
    """Generate a weak-label dataset file from a labeled dataset."""
    cfg = _load_config(config_path, {"seed": seed})
    if unlabeled_fraction is not None:
        cfg.setdefault("weaken", {})["unlabeled_fraction"] = unlabeled_fraction
    seed = int(cfg.get("seed", 0))
    ds = _load_dataset(cfg)
    wd = _weaken_from_config(ds, cfg, seed)
    _write_manifest(out, cfg, seed)
    path = os.path.join(out, "weak.jsonl")
    weaklabel.save_weak(wd, path)
    click.echo(f"wrote {path} (groups {dict(enumerate(wd.counts.tolist(), 1))}, "
               f"unlabeled {wd.n_unlabeled})")


@main.command("train")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--weak", "weak_path", type=click.Path(), default=None,
              help="Weak dataset file (overrides config 'weak').")
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default="out")
@click.option("--estimator", type=click.Choice(trainer.ESTIMATORS), default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--nn-correction/--no-nn-correction", default=None)
def train_cmd(config_path, weak_path, seed, out, estimator, gamma, nn_correction):
    """Train a classifier on a weak dataset; writes checkpoint + history CSV."""
    cfg = _load_config(config_path, {"seed": seed})
    tr = cfg.setdefault("train", {})
    if estimator is not None:
        tr["estimator"] = estimator
    if gamma is not None:
        tr["gamma"] = gamma
    if nn_correction is not None:
        tr["nn_correction"] = nn_correction
    seed = int(cfg.get("seed", 0))
    weak_path = weak_path or cfg.get("weak")
    if not weak_path:
        raise ConfigError("no weak dataset file given (--weak or config 'weak')")
    try:
        wd = weaklabel.load_weak(weak_path)
    except (OSError, ValueError, KeyError) as e:
        raise ConfigError(f"cannot load weak dataset: {e}")
    tcfg, g = _train_config(cfg, seed)
    tcfg.weights = _resolve_train_weights(wd, tcfg, g)
    _write_manifest(out, cfg, seed)
    try:
        model, history = trainer.train(wd, tcfg)
    except trainer.DivergenceError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_DIVERGENCE)
    except trainer.ConfigurationError as e:
        raise ConfigError(str(e))
    save_checkpoint(model, os.path.join(out, "checkpoint.json"))
    trainer.save_history(history, os.path.join(out, "history.csv"))
    click.echo(f"trained {tcfg.estimator} for {tcfg.max_iterations} iterations; "
               f"artifacts in {out}")


@main.command("eval")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--checkpoint", type=click.Path(), required=True)
@click.option("--seed", type=int, default=None)
def eval_cmd(config_path, checkpoint, seed):
    """Evaluate a checkpoint on the configured test dataset."""
    cfg = _load_config(config_path, {"seed": seed})
    ds = _load_dataset(cfg)
    try:
        model = load_checkpoint(checkpoint)
    except (OSError, ValueError, KeyError) as e:
        raise ConfigError(f"cannot load checkpoint: {e}")
    acc = trainer.evaluate(model, ds)
    click.echo(f"accuracy {acc:.4f}")


@main.command("verify")
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), default=None)
@click.option("--configs", type=int, default=50)
@click.option("--tol", type=float, default=1e-10)
def verify_cmd(seed, out, configs, tol):
    """Run the exact-enumeration identity suite and gradient checks."""
    report = oracle.verify_unbiasedness(configs=configs, tol=tol, seed=seed)
    rng = np.random.default_rng(seed)
    grad_max = 0.0
    from . import losses
    for _ in range(20):
        K = int(rng.choice([2, 3, 5]))
        c = int(rng.integers(1, K))
        cset = tuple(sorted(rng.choice(np.arange(1, K + 1), size=c, replace=False).tolist()))
        g = rng.uniform(-3, 3, size=K)
        err = oracle.fd_gradient_check(lambda x: losses.mc_loss(x, cset, K), g)
        grad_max = max(grad_max, err)
    report["gradient_check_max_rel_err"] = grad_max
    report["gradient_check_passed"] = grad_max <= 1e-5
    ok = report["passed"] and report["gradient_check_passed"]
    text = json.dumps(report, indent=2)
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "verify.json"), "w") as fh:
            fh.write(text + "\n")
    click.echo(text)
    if not ok:
        sys.exit(EXIT_VERIFY)


@main.command("rate")
@click.option("--seed", type=int, default=0)
@click.option("--estimator", type=click.Choice(["ordinary", "mcl", "mcul"]),
              default="mcl")
@click.option("--trials", type=int, default=200)
@click.option("--gamma", type=float, default=0.1)
@click.option("--out", type=click.Path(), default=None)
def rate_cmd(seed, estimator, trials, gamma, out):
    """Monte-Carlo estimation-error decay versus sample size."""
    K = 3
    fd = datasets.synth_mixture(K, 2, 6, seed)
    rng = np.random.default_rng(seed)
    scores = rng.uniform(-3, 3, size=(fd.m, K))
    w = MixtureWeights(np.full(K - 1, 1.0 / (K - 1)), gamma=gamma)
    rows, slope = oracle.mc_convergence(fd, scores, estimator,
                                        [100, 1000, 10000, 100000],
                                        trials, seed, w)
    click.echo(f"{'n':>8}  mean |err|")
    for n, e in rows:
        click.echo(f"{n:>8}  {e:.6g}")
    click.echo(f"log-log slope: {slope:.3f}")
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "rate.csv"), "w") as fh:
            fh.write("n,mean_abs_err\n")
            for n, e in rows:
                fh.write(f"{n},{e}\n")
            fh.write(f"# slope,{slope}\n")


@main.command("sweep")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default="out")
@click.option("--trials", type=int, default=None)
@click.option("--estimator", type=click.Choice(trainer.ESTIMATORS), default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--unlabeled-fraction", type=float, default=None)
@click.option("--nn-correction/--no-nn-correction", default=None)
def sweep_cmd(config_path, seed, out, trials, estimator, gamma,
              unlabeled_fraction, nn_correction):
    """Repeat the full generate/train/evaluate protocol over several seeds
    and print a mean +- std accuracy table."""
    cfg = _load_config(config_path, {"seed": seed})
    if trials is not None:
        cfg["trials"] = trials
    tr = cfg.setdefault("train", {})
    if estimator is not None:
        tr["estimator"] = estimator
    if gamma is not None:
        tr["gamma"] = gamma
    if nn_correction is not None:
        tr["nn_correction"] = nn_correction
    if unlabeled_fraction is not None:
        cfg.setdefault("weaken", {})["unlabeled_fraction"] = unlabeled_fraction
    seed = int(cfg.get("seed", 0))
    n_trials = int(cfg.get("trials", 1))
    if n_trials < 1:
        raise ConfigError("trials must be >= 1")
    ds = _load_dataset(cfg)
    _write_manifest(out, cfg, seed)
    accs = []
    for t in range(n_trials):
        trial_seed = seed + t
        train_ds, test_ds = datasets.split(ds, 0.9, trial_seed)
        train_ds, val_ds = datasets.split(train_ds, 0.9, trial_seed + 1)
        wd = _weaken_from_config(train_ds, cfg, trial_seed)
        tcfg, g = _train_config(cfg, trial_seed)
        try:
            tcfg.weights = _resolve_train_weights(wd, tcfg, g)
            model, _ = trainer.train(wd if tcfg.estimator != "ordinary" else train_ds,
                                     tcfg, val_ds=val_ds)
        except trainer.DivergenceError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_DIVERGENCE)
        except trainer.ConfigurationError as e:
            raise ConfigError(str(e))
        acc = trainer.evaluate(model, test_ds)
        accs.append(acc)
        click.echo(f"trial {t}: accuracy {acc:.4f}")
    mean, std = float(np.mean(accs)), float(np.std(accs))
    est = tr.get("estimator", "mcl")
    click.echo(f"{est}: {100 * mean:.2f}±{100 * std:.2f}")
    with open(os.path.join(out, "sweep.csv"), "w") as fh:
        fh.write("estimator,mean,std," + ",".join(f"trial{t}" for t in range(n_trials)) + "\n")
        fh.write(f"{est},{mean},{std}," + ",".join(str(a) for a in accs) + "\n")


if __name__ == "__main__":
    main()
