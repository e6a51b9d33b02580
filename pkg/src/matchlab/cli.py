"""Command line front end.

Subcommands: solve (continuum cutoff), simulate (one finite-market cell),
experiment (config-driven sweep writing results.csv + manifest.json), and
report (grouped mean/SE table from a results CSV).

Exit codes: 0 success, 1 usage or config errors, 2 runtime or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .access import parse_kappa, parse_strategy
from .continuum import MODES, MarketSpec, solve_cutoff, solution_record
from .distributions import parse_distribution
from .experiments import (
    ConfigError,
    ExperimentConfig,
    RUM_PREFS,
    UNIFORM_PREFS,
    parse_config,
    read_csv_rows,
    run_correlated_suite,
    run_experiment,
    summarize,
    write_outputs,
)

CORRELATED_EXPERIMENT_ID = "E-CORRELATED"

_DEFAULT_VALUES = "uniform(0,1)"
_DEFAULT_NOISE = "uniform(-0.5,0.5)"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # Usage problems must exit 1, not argparse's default 2.
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="matchlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve the continuum market-clearing cutoff")
    solve.add_argument("--mode", choices=MODES, required=True)
    solve.add_argument("--m", type=int, default=2, help="number of firms")
    solve.add_argument("--S", type=float, default=0.5, help="total capacity share")
    solve.add_argument("--values", default=_DEFAULT_VALUES, help="applicant value distribution")
    solve.add_argument("--noise", default=_DEFAULT_NOISE, help="score noise distribution")
    solve.add_argument("--kappa", default=None, help="access law, e.g. uniform(1..5)")

    sim = sub.add_parser("simulate", help="simulate finite markets for one sweep cell")
    sim.add_argument("--mode", choices=MODES, required=True)
    sim.add_argument("--m", type=int, default=10)
    sim.add_argument("--n", type=int, default=1000)
    sim.add_argument("--S", type=float, default=0.5)
    sim.add_argument("--values", default=_DEFAULT_VALUES)
    sim.add_argument("--noise", default=_DEFAULT_NOISE)
    sim.add_argument("--kappa", default=None)
    sim.add_argument("--strategy", default="topk", help="portfolio rule under an access law")
    sim.add_argument("--beta", type=float, default=None, help="quality weight (random-utility)")
    sim.add_argument("--gamma", type=float, default=None, help="distance weight (random-utility)")
    sim.add_argument("--reps", type=int, default=1)
    sim.add_argument("--seed", type=int, default=42)

    exp = sub.add_parser("experiment", help="run a config-driven experiment")
    exp.add_argument("--config", required=True, help="path to a key = value config file")
    exp.add_argument("--out", default=None, help="output directory (default $MATCHLAB_OUT or .)")
    exp.add_argument("--seed", type=int, default=None)
    exp.add_argument("--reps", type=int, default=None)
    exp.add_argument("--threads", type=int, default=None)
    exp.add_argument("--full", action="store_true",
                     help="run full-scale replication counts")

    rep = sub.add_parser("report", help="print a grouped mean/SE table from a results CSV")
    rep.add_argument("csv", help="path to a results.csv")
    rep.add_argument("--group", default="experiment,mode,m,metric",
                     help="comma-separated grouping columns")

    return parser


def _cmd_solve(args) -> int:
    spec = MarketSpec(
        m=args.m,
        S=args.S,
        value_dist=parse_distribution(args.values),
        noise_dist=parse_distribution(args.noise),
        mode=args.mode,
        kappa=parse_kappa(args.kappa) if args.kappa else None,
    )
    sol = solve_cutoff(spec)
    print(json.dumps(solution_record(spec, sol)))
    return 0


def _cmd_simulate(args) -> int:
    rum = args.beta is not None or args.gamma is not None
    capacity = round(args.S * args.n)
    config = ExperimentConfig(
        experiment="SIMULATE",
        n=args.n,
        m_values=(args.m,),
        capacity=capacity,
        value_dist=parse_distribution(args.values),
        noise_dist=parse_distribution(args.noise),
        modes=(args.mode,),
        preferences=RUM_PREFS if rum else UNIFORM_PREFS,
        betas=(args.beta if args.beta is not None else 0.0,),
        gammas=(args.gamma if args.gamma is not None else 0.0,),
        kappa=parse_kappa(args.kappa) if args.kappa else None,
        strategies=(parse_strategy(args.strategy).kind,),
        replications=args.reps,
        seed=args.seed,
        full=True,
    )
    rows = run_experiment(config)
    scalars = [r for r in rows if r.k_bin is None and r.value_bin is None]
    out: dict = {s["metric"]: s["mean"] for s in summarize(scalars, ("metric",))}
    by_k = [r for r in rows if r.k_bin is not None]
    for s in summarize(by_k, ("metric", "k_bin")) if by_k else []:
        out.setdefault(s["metric"], {})[str(s["k_bin"])] = s["mean"]
    print(json.dumps(out, sort_keys=True))
    return 0


def _cmd_experiment(args) -> int:
    config = parse_config(args.config)
    if args.seed is not None:
        config = _with(config, seed=args.seed)
    if args.reps is not None:
        config = _with(config, replications=args.reps)
    if args.threads is not None:
        config = _with(config, threads=args.threads)
    if args.full:
        config = _with(config, full=True)
    out_dir = args.out or config.out_dir or os.environ.get("MATCHLAB_OUT") or "."
    if config.experiment == CORRELATED_EXPERIMENT_ID:
        rows = run_correlated_suite(config)
    else:
        rows = run_experiment(config)
    csv_path, manifest_path = write_outputs(config, rows, out_dir)
    print(f"wrote {len(rows)} rows to {csv_path}")
    print(f"wrote manifest to {manifest_path}")
    return 0


def _with(config: ExperimentConfig, **kw) -> ExperimentConfig:
    from dataclasses import replace

    return replace(config, **kw)


def _cmd_report(args) -> int:
    rows = read_csv_rows(args.csv)
    keys = tuple(k.strip() for k in args.group.split(",") if k.strip())
    valid = {"experiment", "replication", "mode", "m", "beta", "gamma",
             "k_bin", "value_bin", "metric", "seed"}
    bad = [k for k in keys if k not in valid]
    if bad:
        raise ValueError(f"unknown group columns: {bad}")
    table = summarize(rows, keys)
    header = list(keys) + ["mean", "se", "count"]
    lines = [header]
    for entry in table:
        lines.append(
            [("" if entry[k] is None else str(entry[k])) for k in keys]
            + [f"{entry['mean']:.6g}", f"{entry['se']:.6g}", str(entry["count"])]
        )
    widths = [max(len(row[i]) for row in lines) for i in range(len(header))]
    for row in lines:
        print("  ".join(cell.ljust(w) for w, cell in zip(widths, row)).rstrip())
    return 0


_COMMANDS = {
    "solve": _cmd_solve,
    "simulate": _cmd_simulate,
    "experiment": _cmd_experiment,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
