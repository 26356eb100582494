"""Command-line interface.

Subcommands map to the experiment families: ``gen-data`` (write a KDS1
dataset), ``train`` (multi-seed experiment), ``eval`` (horizon errors of a
checkpoint), ``estimate-theta`` (DMD-based spike-and-slab estimate),
``init-spectrum`` (initialisation spectrum report), and ``report``
(cross-run comparison table).
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .config import load_config, validate_config
from .data import load_dataset, inverse_standardize, save_dataset, windows_from_dataset
from .dmd import dataset_snapshot_pairs, dmd_from_pairs, estimate_theta
from .errors import EigenkaeError
from .harness import build_dataset, run_experiment
from .model import KAEModel
from .report import KNOWN_SCHEMES, init_spectrum_report, write_spectrum_report
from .training import evaluate_horizons


def _add_common(parser, config_required=True):
    parser.add_argument("--config", required=config_required,
                        help="path to the experiment JSON config")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config's seed list with one seed")
    parser.add_argument("--out", default=None, help="output path override")


def _cmd_gen_data(args):
    cfg = validate_config(load_config(args.config))
    seed = args.seed if args.seed is not None else cfg["seeds"][0]
    ds = build_dataset(cfg["dataset"], seed)
    out = args.out or str(Path(cfg["out_dir"]) / "dataset.kds1")
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    save_dataset(out, ds)
    print(f"wrote {ds.n_trajectories} trajectories "
          f"(dim {ds.state_dim}, dt {ds.dt}) to {out}")
    return 0


def _cmd_train(args):
    cfg = validate_config(load_config(args.config))
    seeds = [args.seed] if args.seed is not None else None
    result = run_experiment(cfg, out_dir=args.out, seeds=seeds, workers=args.workers)
    for r in result.results:
        if r.status == "ok":
            conv = r.log.convergence_epoch
            print(f"seed {r.seed}: ok  final_val={r.log.val_loss[-1]:.6g}  "
                  f"cumulative={r.log.cumulative_error:.6g}  convergence_epoch={conv}")
        else:
            print(f"seed {r.seed}: ERROR  {r.error.splitlines()[0]}")
    print(f"artifacts in {result.out_dir}")
    return 0 if result.succeeded else 1


def _cmd_eval(args):
    cfg = validate_config(load_config(args.config))
    ds = load_dataset(args.data)
    rng = np.random.default_rng(0)
    model = KAEModel.build(ds.state_dim, cfg["model"]["latent_dim"], rng,
                           hidden=tuple(cfg["model"]["hidden"]),
                           identity_codec=cfg["model"]["identity_codec"])
    model.load(args.checkpoint)
    max_h = cfg["eval"]["max_horizon"]
    windows = windows_from_dataset(ds, "test", max_h + 1)
    if windows.shape[0] == 0:
        print("dataset has no test windows long enough", file=sys.stderr)
        return 1
    errors, cumulative = evaluate_horizons(model, windows, max_h)
    out = args.out or "horizons.csv"
    lines = ["horizon,mse"]
    lines.extend(f"{i + 1},{float(e)!r}" for i, e in enumerate(errors))
    lines.append(f"cumulative,{float(cumulative)!r}")
    Path(out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"cumulative test error over {max_h} horizons: {cumulative:.6g} -> {out}")
    return 0


def _cmd_estimate_theta(args):
    ds = load_dataset(args.data)
    if ds.standardized:
        ds = inverse_standardize(ds)
    x, y = dataset_snapshot_pairs(ds)
    result = dmd_from_pairs(x, y, args.latent_dim)
    theta = estimate_theta(result.eigenvalues, tol=args.tol)
    mods = np.abs(result.eigenvalues)
    print("eigenvalue moduli:", " ".join(f"{m:.6f}" for m in mods))
    print(f"theta_hat = {theta!r}")
    return 0


def _cmd_init_spectrum(args):
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    report = init_spectrum_report(
        args.n, args.depth, schemes, args.samples, rng, theta=args.theta,
        slab=tuple(args.slab), sigma=args.sigma, probe_dim=args.probe_dim,
        hidden=tuple(args.hidden))
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    write_spectrum_report(report, out / "init_spectrum_hist.csv",
                          out / "init_spectrum_means.csv")
    for scheme in schemes:
        print(f"{scheme}: mean eigenvalue modulus {report.means[scheme]:.4f}")
    print(f"histograms in {out}")
    return 0


def _cmd_report(args):
    rows = []
    for run in args.runs:
        run = Path(run)
        manifest = json.loads((run / "manifest.json").read_text(encoding="utf-8"))
        scheme = manifest["config"]["scheme"]
        with open(run / "aggregate.csv", newline="", encoding="utf-8") as fh:
            for rec in csv.DictReader(fh):
                rows.append({"run": run.name, "scheme": scheme, **rec})
    out = args.out or "report.csv"
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["run", "scheme", "metric", "mean", "std"])
        writer.writeheader()
        writer.writerows(rows)

    highlight = ("convergence_epoch", "cumulative_test_error", "min_val_loss")
    print(f"{'run':<24} {'scheme':<10} " + " ".join(f"{m:>22}" for m in highlight))
    by_run = {}
    for row in rows:
        by_run.setdefault((row["run"], row["scheme"]), {})[row["metric"]] = row["mean"]
    for (run, scheme), metrics in by_run.items():
        vals = " ".join(f"{float(metrics[m]):>22.6g}" if m in metrics else f"{'-':>22}"
                        for m in highlight)
        print(f"{run:<24} {scheme:<10} {vals}")
    print(f"combined table -> {out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="eigenkae",
        description="Koopman autoencoders with spectral regularisation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a dataset file from a config")
    _add_common(p)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("train", help="run a multi-seed training experiment")
    _add_common(p)
    p.add_argument("--workers", type=int, default=1,
                   help="seeds run in this many parallel processes")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset's test split")
    _add_common(p)
    p.add_argument("--checkpoint", required=True, help="KAE1 checkpoint path")
    p.add_argument("--data", required=True, help="KDS1 dataset path")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("estimate-theta",
                       help="estimate the spike-and-slab theta of a dataset via DMD")
    p.add_argument("--data", required=True, help="KDS1 dataset path")
    p.add_argument("--latent-dim", type=int, required=True, help="DMD rank")
    p.add_argument("--tol", type=float, default=1e-3,
                   help="modulus tolerance for counting unit eigenvalues")
    p.set_defaults(func=_cmd_estimate_theta)

    p = sub.add_parser("init-spectrum",
                       help="histogram eigenvalue moduli of initialisation schemes")
    p.add_argument("--n", type=int, default=4, help="operator size")
    p.add_argument("--depth", type=int, default=6, help="layers per sampled operator")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--schemes", default=",".join(KNOWN_SCHEMES))
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--slab", type=float, nargs=2, default=(0.0, 1.0))
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--probe-dim", type=int, default=2)
    p.add_argument("--hidden", type=int, nargs="*", default=(64, 32))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_init_spectrum)

    p = sub.add_parser("report", help="combine run directories into one table")
    p.add_argument("--runs", nargs="+", required=True, help="run output directories")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EigenkaeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
