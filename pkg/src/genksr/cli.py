"""Command-line entry point.

Subcommands: gen-data, train, generate, eval, complexity, report. Exit codes:
0 success, 1 validation error (bad config, schema, arguments), 2 runtime or
numeric failure. Diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .genmodel import TrainingDiverged
from .linalg import LanczosError
from .pipeline import experiments
from .pipeline.config import ConfigError, load_config
from .pipeline.datasets import SchemaError
from .pipeline.report import render_report


def _add_common(sub: argparse.ArgumentParser, need_config: bool = True):
    if need_config:
        sub.add_argument("--config", required=True, help="experiment config JSON")
    sub.add_argument("--out", default=None, help="output directory override")
    sub.add_argument("--seed", type=int, default=None, help="master seed override")
    sub.add_argument("--threads", type=int, default=None,
                     help="worker threads (default: GENKSR_THREADS or 1)")
    sub.add_argument("--mode", choices=["kqd", "skqd"], default=None,
                     help="pipeline mode override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genksr",
        description="Krylov diagonalization experiments with a generative "
                    "surrogate for measurement records.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("gen-data", help="simulate shot datasets")
    _add_common(p)

    p = subs.add_parser("train", help="train the generative model")
    _add_common(p)
    p.add_argument("--backbone", choices=["attention", "ssm"], default=None)

    p = subs.add_parser("generate", help="sample records from a checkpoint")
    _add_common(p)
    p.add_argument("--backbone", choices=["attention", "ssm"], default="attention")
    p.add_argument("--checkpoint", default=None, help="checkpoint path override")
    p.add_argument("--ham-ids", default=None,
                   help="comma-separated instance ids (default: test split)")
    p.add_argument("--t-max", type=int, default=None,
                   help="generate steps 0..t_max-1 (default: d_eval)")
    p.add_argument("--n-samples", type=int, default=None,
                   help="samples per (instance, step); default config gen_shots")

    p = subs.add_parser("eval", help="energy curves and error metrics")
    _add_common(p)
    p.add_argument("--sources", default=None,
                   help="comma-separated sources (kqd: exact_sim, "
                        "classical_shadow, model_attention, model_ssm; "
                        "skqd: device_sim, model_attention, model_ssm)")

    p = subs.add_parser("complexity", help="shadow sample-complexity tables")
    p.add_argument("--out", default=".", help="directory for the CSV tables")
    p.add_argument("--eps", default="1.0,0.5,0.2,0.1",
                   help="comma-separated accuracy targets")
    p.add_argument("--observables", type=int, default=100,
                   help="observable count L for the eps table")
    p.add_argument("--locality", type=int, default=3,
                   help="max observable locality k")
    p.add_argument("--delta", type=float, default=0.01,
                   help="failure probability")
    p.add_argument("--family", choices=["heis1d", "j1j2_2d", "xxz_chain"],
                   default="heis1d")
    p.add_argument("--n-min", type=int, default=5)
    p.add_argument("--n-max", type=int, default=20)

    p = subs.add_parser("report", help="render figures from a run directory")
    p.add_argument("--out", required=True, help="run directory with eval CSVs")
    return parser


def _config_from(args) -> "experiments.ExperimentConfig":
    overrides = {"out_dir": args.out, "seed": args.seed, "mode": args.mode}
    return load_config(args.config, overrides)


def _run(args) -> int:
    if args.command == "gen-data":
        cfg = _config_from(args)
        threads = experiments.threads_from(args.threads)
        paths = experiments.gen_data(cfg, threads)
        for name, path in paths.items():
            print(f"{name}: {path}")
        return 0
    if args.command == "train":
        cfg = _config_from(args)
        ckpt = experiments.train_model(cfg, args.backbone)
        print(f"checkpoint: {ckpt}")
        return 0
    if args.command == "generate":
        cfg = _config_from(args)
        ham_ids = ([int(x) for x in args.ham_ids.split(",")]
                   if args.ham_ids else None)
        t_indices = list(range(args.t_max)) if args.t_max is not None else None
        path = experiments.generate(cfg, args.backbone, ham_ids, t_indices,
                                    args.n_samples,
                                    Path(args.checkpoint) if args.checkpoint else None)
        print(f"generated: {path}")
        return 0
    if args.command == "eval":
        cfg = _config_from(args)
        sources = args.sources.split(",") if args.sources else None
        paths = experiments.evaluate(cfg, sources)
        for name, path in paths.items():
            print(f"{name}: {path}")
        return 0
    if args.command == "complexity":
        eps_list = [float(x) for x in args.eps.split(",")]
        eps_rows, qubit_rows = experiments.complexity_tables(
            eps_list, args.observables, args.locality, args.delta,
            args.family, range(args.n_min, args.n_max + 1))
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        experiments.write_csv(out / "complexity_eps.csv",
                              ["eps", "snapshots"], eps_rows)
        experiments.write_csv(out / "complexity_qubits.csv",
                              ["n_qubits", "observables", "snapshots"], qubit_rows)
        print(f"tables: {out / 'complexity_eps.csv'}, "
              f"{out / 'complexity_qubits.csv'}")
        return 0
    if args.command == "report":
        for path in render_report(Path(args.out)):
            print(f"figure: {path}")
        return 0
    raise AssertionError(f"unhandled command {args.command}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except (ConfigError, SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (TrainingDiverged, LanczosError, FloatingPointError, RuntimeError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
