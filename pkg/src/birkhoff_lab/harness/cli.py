"""``birkhoff-lab`` command line.

Exit status: 0 when every verdict passes, 1 when a verdict fails, 2 for
usage and config errors, 3 when an operation raised.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from birkhoff_lab.harness.config import EXPERIMENTS, SAMPLERS, ConfigError, ExperimentConfig
from birkhoff_lab.harness.experiments import run_experiment

SEED_ENV = "BIRKHOFF_LAB_SEED"

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ERROR = 0, 1, 2, 3

# option name -> (type, help); shared by every subcommand
_OPTIONS = {
    "n": (int, "matrix size"),
    "n_list": (int, "several matrix sizes (marginal, oracle-compare)"),
    "m": (int, "row count for the volume experiment"),
    "samples": (int, "number of samples"),
    "chains": (int, "independent Gibbs chains the samples are split over"),
    "burn_in": (int, "Gibbs burn-in moves (default 10 n^2 ceil(ln n))"),
    "spacing": (int, "Gibbs moves between kept states (default 8 n^2)"),
    "epsilon": (float, "max-entry slack epsilon"),
    "k": (int, "submatrix block size"),
    "t_max": (int, "largest power for the mixing profile"),
    "trials": (int, "margin perturbation trials"),
    "proposals": (int, "Monte Carlo proposals per volume estimate"),
    "bound_vectors": (int, "random bound vectors for the peak check"),
    "r": (int, "number of rows for the density ratio bound"),
}


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=default, help=f"master seed (env {SEED_ENV} if unset)")
    parser.add_argument("--workers", type=int, default=default, help="processes for independent chains")
    parser.add_argument("--config", default=default, help="JSON config file; flags override its values")
    parser.add_argument("--out", default=default, help="directory for report.json and data files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="birkhoff-lab",
        description="Sample the Birkhoff polytope and check its limit laws.",
    )
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for exp in EXPERIMENTS:
        p = sub.add_parser(exp.replace("_", "-"), help=f"run the {exp.replace('_', ' ')} experiment")
        _global_flags(p, suppress=True)
        for name, (typ, text) in _OPTIONS.items():
            flag = "--" + name.replace("_", "-")
            if name == "n_list":
                p.add_argument(flag, type=typ, nargs="+", help=text)
            else:
                p.add_argument(flag, type=typ, help=text)
        if exp == "sample":
            p.add_argument("--sampler", choices=SAMPLERS, help="which sampler to run")
        p.add_argument("--csv", action="store_true", help="also write raw values as CSV")
        p.add_argument("--save-batch", action="store_true", help="also write the sample batch file")
        p.add_argument("--quiet", action="store_true", help="print only the final status line")
    return parser


def config_from_args(args: argparse.Namespace, environ=os.environ) -> ExperimentConfig:
    experiment = args.command.replace("-", "_")
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        if data.get("experiment", experiment) != experiment:
            raise ConfigError(f"config is for {data['experiment']!r}, command is {experiment!r}")
    data["experiment"] = experiment
    for name in _OPTIONS:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    if getattr(args, "sampler", None):
        data["sampler"] = args.sampler
    if args.csv:
        data["write_csv"] = True
    if args.save_batch:
        data["write_batch"] = True
    if args.out:
        data["out_dir"] = args.out
    if args.workers is not None:
        data["workers"] = args.workers
    source = "config" if "seed" in data else "default"
    if args.seed is not None:
        data["seed"] = args.seed
        source = "flag"
    elif environ.get(SEED_ENV) and "seed" not in data:
        try:
            data["seed"] = int(environ[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={environ[SEED_ENV]!r} is not an integer") from None
        source = "env"
    cfg = ExperimentConfig.from_dict(data)
    cfg.seed_source = source
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"birkhoff-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = run_experiment(cfg)
    if not args.quiet:
        print(f"experiment {cfg.experiment}  seed {cfg.seed} ({cfg.seed_source})")
        for v in report.verdicts:
            mark = "PASS" if v.passed else "FAIL"
            print(f"  {mark}  {v.name}: {v.value!r} {v.relation} {v.threshold!r}  [{v.threshold_key}]")
    if report.error:
        print(f"error: {report.error}", file=sys.stderr)
        return EXIT_ERROR
    print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
