"""Multi-seed experiment orchestration.

One experiment = one config = one scheme trained across several seeds.
Each seed builds its dataset, initialises the model per the scheme, trains,
evaluates prediction horizons, and writes its own CSVs; the aggregate step
summarises across seeds. Wall-clock times live in a separate file so every
other artifact is byte-reproducible. Seeds are independent jobs and may run
in parallel processes.
"""

import concurrent.futures
import json
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

import eigenkae

from .config import config_hash, validate_config
from .data import (PendulumParams, gen_linear_dataset, load_dataset,
                   simulate_pendulum, standardize_split, windows_from_dataset)
from .errors import EigenkaeError, ParameterError
from .linalg import backend_name
from .metrics import MetricsLog, convergence_epoch
from .spectral_reg import SpikeSlabSpec
from .training import TrainConfig, build_model, evaluate_horizons, train

_SCHEME_TO_INIT = {"none": "gaussian", "xavier": "xavier", "eigeninit": "eigeninit",
                   "eigenloss": "gaussian", "both": "eigeninit"}


@dataclass
class SeedResult:
    seed: int
    status: str               # "ok" or "error"
    error: str = None
    log: MetricsLog = None


@dataclass
class ExperimentResult:
    out_dir: Path
    results: list             # SeedResult per seed, config order
    aggregate: dict           # metric -> (mean, std)

    @property
    def succeeded(self):
        return [r for r in self.results if r.status == "ok"]

    @property
    def failed(self):
        return [r for r in self.results if r.status == "error"]


def build_dataset(dataset_cfg, seed):
    """Dataset for one seed: generated (seed-dependent) or loaded from disk."""
    if "path" in dataset_cfg:
        return load_dataset(dataset_cfg["path"])
    rng = np.random.default_rng(np.random.SeedSequence((seed, 2)))
    if dataset_cfg["generator"] == "pendulum":
        params = PendulumParams(omega0=dataset_cfg["omega0"], f0=dataset_cfg["f0"],
                                omega=dataset_cfg["omega"], dt=dataset_cfg["dt"],
                                steps=dataset_cfg["steps"])
        ds = simulate_pendulum(params, dataset_cfg["n_trajectories"], rng)
    else:
        spectrum = [complex(re, im) for re, im in dataset_cfg["spectrum"]]
        ds, _ = gen_linear_dataset(spectrum, dataset_cfg["dim"],
                                   dataset_cfg["n_trajectories"],
                                   dataset_cfg["steps"], rng)
    if dataset_cfg["standardize"]:
        ds = standardize_split(ds, tuple(dataset_cfg["split"]))
    else:
        ds = _split_only(ds, tuple(dataset_cfg["split"]))
    return ds


def _split_only(ds, fractions):
    from dataclasses import replace
    n = ds.n_trajectories
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise ParameterError(f"{n} trajectories are too few for split {fractions}")
    splits = np.concatenate([np.zeros(n_train), np.ones(n_val),
                             np.full(n_test, 2)]).astype(np.uint8)
    return replace(ds, splits=splits)


def train_config_for(cfg, seed):
    """Translate the scheme section of a config into a TrainConfig."""
    scheme = cfg["scheme"]
    spike = None
    if scheme in ("eigeninit", "both"):
        spike = SpikeSlabSpec(cfg["eigeninit"]["theta"], tuple(cfg["eigeninit"]["slab"]))
    weight = cfg["eigenloss"]["weight"] if scheme in ("eigenloss", "both") else 0.0
    tr = cfg["train"]
    return TrainConfig(
        horizon=tr["horizon"], eigenloss_weight=weight,
        u_init=_SCHEME_TO_INIT[scheme], spike_slab=spike,
        epochs=tr["epochs"], batch_size=tr["batch_size"], lr=tr["lr"],
        betas=tuple(tr["betas"]), eps=tr["eps"], weight_decay=tr["weight_decay"],
        seed=seed, hidden=tuple(cfg["model"]["hidden"]))


def run_seed(cfg, seed, out_dir=None):
    """Train and evaluate one seed; optionally write its artifact files."""
    ds = build_dataset(cfg["dataset"], seed)
    tc = train_config_for(cfg, seed)
    model = build_model(ds.state_dim, cfg["model"]["latent_dim"], tc,
                        identity_codec=cfg["model"]["identity_codec"])
    log = train(model, ds, tc)

    max_h = cfg["eval"]["max_horizon"]
    test_w = windows_from_dataset(ds, "test", max_h + 1)
    if test_w.shape[0]:
        log.horizon_errors, log.cumulative_error = evaluate_horizons(model, test_w, max_h)
    try:
        log.convergence_epoch = convergence_epoch(log.val_loss)
    except ParameterError:
        log.convergence_epoch = None

    if out_dir is not None:
        out = Path(out_dir)
        _write_losses(out / f"losses_{seed}.csv", log)
        _write_heatmap(out / f"eig_heatmap_{seed}.csv", log)
        _write_timing(out / f"timing_{seed}.csv", log)
        if log.horizon_errors is not None:
            _write_horizons(out / f"horizons_{seed}.csv", log)
        model.save(out / f"model_{seed}.kae")
    return log


def _run_seed_entry(args):
    cfg, seed, out_dir = args
    try:
        log = run_seed(cfg, seed, out_dir)
        return SeedResult(seed, "ok", log=log)
    except Exception as exc:  # noqa: BLE001 - recorded in the manifest
        detail = f"{type(exc).__name__}: {exc}"
        if not isinstance(exc, EigenkaeError):
            detail += "\n" + traceback.format_exc()
        return SeedResult(seed, "error", error=detail)


def run_experiment(config, out_dir=None, seeds=None, workers=1):
    """Run every seed of an experiment and aggregate the results.

    ``config`` may be a raw dict (it will be validated) and is the single
    source of truth; ``out_dir``/``seeds`` override its fields. Per-seed
    failures are recorded in the manifest rather than aborting the others.
    """
    cfg = validate_config(config)
    seeds = list(seeds) if seeds is not None else list(cfg["seeds"])
    out = Path(out_dir if out_dir is not None else cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)

    jobs = [(cfg, seed, out) for seed in seeds]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_seed_entry, jobs))
    else:
        results = [_run_seed_entry(job) for job in jobs]

    aggregate = _aggregate(results, cfg)
    _write_aggregate(out / "aggregate.csv", aggregate)
    _write_manifest(out / "manifest.json", cfg, results)
    return ExperimentResult(out, results, aggregate)


def _aggregate(results, cfg):
    """Across-seed mean/std of the final metrics (successful seeds only)."""
    oks = [r.log for r in results if r.status == "ok"]
    agg = {}
    if not oks:
        return agg

    def stats(values):
        arr = np.asarray([v for v in values if v is not None], dtype=np.float64)
        if arr.size == 0:
            return None
        return float(arr.mean()), float(arr.std())

    agg["final_train_loss"] = stats([log.train_loss[-1] for log in oks if log.train_loss])
    agg["final_val_loss"] = stats([log.val_loss[-1] for log in oks if log.val_loss])
    agg["min_val_loss"] = stats([min(log.val_loss) for log in oks if log.val_loss])
    agg["convergence_epoch"] = stats([log.convergence_epoch for log in oks])
    if all(log.horizon_errors is not None for log in oks):
        max_h = cfg["eval"]["max_horizon"]
        for step in range(max_h):
            agg[f"horizon_{step + 1}"] = stats([log.horizon_errors[step] for log in oks])
        agg["cumulative_test_error"] = stats([log.cumulative_error for log in oks])
    return {k: v for k, v in agg.items() if v is not None}


def _fmt(x):
    return repr(float(x))


def _write_losses(path, log):
    lines = ["epoch,train_loss,val_loss,eigenloss"]
    for e in range(log.epochs):
        lines.append(f"{e + 1},{_fmt(log.train_loss[e])},"
                     f"{_fmt(log.val_loss[e])},{_fmt(log.eigenloss[e])}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_heatmap(path, log):
    n = len(log.moduli[0]) if log.moduli else 0
    lines = ["epoch" + "".join(f",mod_{j + 1}" for j in range(n))]
    for e in range(log.epochs):
        lines.append(str(e + 1) + "".join(f",{_fmt(v)}" for v in log.moduli[e]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_timing(path, log):
    lines = ["epoch,wall_ms"]
    for e in range(log.epochs):
        lines.append(f"{e + 1},{_fmt(log.wall_ms[e])}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_horizons(path, log):
    lines = ["horizon,mse"]
    for step, err in enumerate(log.horizon_errors):
        lines.append(f"{step + 1},{_fmt(err)}")
    lines.append(f"cumulative,{_fmt(log.cumulative_error)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_aggregate(path, aggregate):
    lines = ["metric,mean,std"]
    for metric, (mean, std) in aggregate.items():
        lines.append(f"{metric},{_fmt(mean)},{_fmt(std)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_manifest(path, cfg, results):
    manifest = {
        "config": cfg,
        "config_hash": config_hash(cfg),
        "package_version": eigenkae.__version__,
        "numpy_version": np.__version__,
        "linalg_backend": backend_name(),
        "seeds": {
            str(r.seed): (
                {"status": r.status} if r.status == "ok"
                else {"status": r.status, "error": r.error})
            for r in results
        },
        "per_seed": {
            str(r.seed): {
                "convergence_epoch": r.log.convergence_epoch,
                "cumulative_test_error": r.log.cumulative_error,
                "final_val_loss": r.log.val_loss[-1] if r.log.val_loss else None,
            }
            for r in results if r.status == "ok"
        },
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
