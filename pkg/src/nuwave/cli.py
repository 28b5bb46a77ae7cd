"""Command line entry point.

    nuwave run CONFIG [--out DIR] [--replicas N] [--seed S] [--threads T]
    nuwave oracle-suite [--out DIR]
    nuwave rates ERRORS_CSV
    nuwave dump-noise --out FILE [--modes N] [--steps J] [--horizon T]
                      [--seed S] [--spectrum-exponent P]

Exit codes: 0 success, 1 bad configuration, 2 a trajectory blew up,
3 the oracle suite reported a failure.
"""

from __future__ import annotations

import argparse
import sys
from collections import defaultdict

from .analysis import rate_fit, replica_seed
from .config import ExperimentConfig, load_config, parse_config
from .errors import BlowUpError, ConfigurationError
from .harness import run_experiment, write_outputs
from .noise import dump_path, power_law_spectrum, sample_path

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nuwave",
        description="Spectral simulations of a damped nonlinear wave "
                    "equation with small inertia and modulated noise.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment a config describes")
    run.add_argument("config", help="path to an INI experiment config")
    run.add_argument("--out", default="out", help="output directory")
    run.add_argument("--replicas", type=int, default=None,
                     help="override run.replicas")
    run.add_argument("--seed", type=int, default=None, help="override run.seed")
    run.add_argument("--threads", type=int, default=1,
                     help="worker threads for the replica ensemble")

    oracle = sub.add_parser("oracle-suite",
                            help="run built-in closed-form consistency checks")
    oracle.add_argument("--out", default=None,
                        help="optional directory for summary.json")

    rates = sub.add_parser("rates", help="refit convergence rates from an "
                                         "errors.csv produced by `run`")
    rates.add_argument("csv", help="path to errors.csv")

    dump = sub.add_parser("dump-noise",
                          help="sample one noise path and write it to disk")
    dump.add_argument("--out", required=True, help="output file")
    dump.add_argument("--modes", type=int, default=32)
    dump.add_argument("--steps", type=int, default=2048)
    dump.add_argument("--horizon", type=float, default=1.0)
    dump.add_argument("--seed", type=int, default=12345)
    dump.add_argument("--spectrum-exponent", type=float, default=4.0,
                      help="covariance decay exponent, b_k ~ k^-p")
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    cfg = cfg.with_overrides(replicas=args.replicas, seed=args.seed)
    record = run_experiment(cfg, threads=args.threads)
    write_outputs(record, args.out)
    for name, alpha, slope, intercept, r2, n in record.rate_rows:
        print("%-28s alpha=%-4g slope=%+.4f r2=%.4f (%d points)"
              % (name, alpha, slope, r2, n))
    print("wrote %s/{errors.csv,rates.csv,summary.json,timing.txt}" % args.out)
    return 0 if record.ok else 3


def _cmd_oracle_suite(args) -> int:
    cfg = parse_config("[run]\nkind = oracle_suite\n")
    record = run_experiment(cfg)
    for entry in record.tables["oracle"]:
        status = "PASS" if entry["passed"] else "FAIL"
        print("%s %-34s %s" % (status, entry["name"], entry["detail"]))
    if args.out is not None:
        write_outputs(record, args.out)
    return 0 if record.ok else 3


def _cmd_rates(args) -> int:
    sups = defaultdict(lambda: defaultdict(float))
    with open(args.csv, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "nu,alpha,seed,t,l2_error":
            raise ConfigurationError(["%s: not an errors.csv" % args.csv])
        for line in fh:
            nu_s, _alpha, seed_s, _t, err_s = line.strip().split(",")
            nu, seed = float(nu_s), int(seed_s)
            sups[nu][seed] = max(sups[nu][seed], float(err_s))
    points = []
    for nu in sorted(sups, reverse=True):
        per_seed = list(sups[nu].values())
        points.append((nu, sum(per_seed) / len(per_seed)))
    fit = rate_fit(points)
    print("slope=%+.4f intercept=%.4f r2=%.4f (%d points)"
          % (fit.slope, fit.intercept, fit.r_squared, fit.n_points))
    return 0


def _cmd_dump_noise(args) -> int:
    spectrum = power_law_spectrum(args.modes, exponent=args.spectrum_exponent)
    seed = replica_seed(args.seed, 0)
    path = sample_path(spectrum, args.horizon, args.steps, seed)
    dump_path(path, args.out)
    print("wrote %s (%d modes x %d steps, seed %d)"
          % (args.out, args.modes, args.steps, seed))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "oracle-suite":
            return _cmd_oracle_suite(args)
        if args.command == "rates":
            return _cmd_rates(args)
        return _cmd_dump_noise(args)
    except ConfigurationError as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return 1
    except OSError as exc:
        print("cannot read input: %s" % exc, file=sys.stderr)
        return 1
    except BlowUpError as exc:
        print("simulation blew up: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
