"""Command line entry point ``hetfx``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .bootstrap.multiplier import DISTRIBUTIONS, MultiplierSpec
from .config import RunConfig
from .errors import HetfxError, InvalidConfig
from .io import FORMATS, ColumnMap, read_csv, save, write_dataset_csv, write_report
from .kernel import KernelSpec

EXIT_OK = 0
EXIT_INTERNAL = 4


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid-w", type=int, default=100, help="w grid points (default 100)")
    p.add_argument("--grid-x", type=int, default=100,
                   help="x grid points for a continuous covariate (default 100)")
    p.add_argument("--bootstrap", type=int, default=1000, help="bootstrap replicates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=_floats, default=[0.01, 0.05, 0.10],
                   help="comma-separated significance levels")
    p.add_argument("--multiplier", choices=DISTRIBUTIONS, default="standard_normal")
    p.add_argument("--bandwidth", type=float, default=None,
                   help="fixed kernel bandwidth (default: Silverman rule)")
    p.add_argument("--bandwidth-scale", type=float, default=1.0)
    p.add_argument("--relevance-tol", type=float, default=0.01)
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: HETFX_THREADS, else all cores)")
    p.add_argument("--format", choices=FORMATS, default="text")
    p.add_argument("--output", default=None, help="write the report here instead of stdout")


def _config(args) -> RunConfig:
    if args.bandwidth is not None:
        kernel = KernelSpec(bandwidth_rule="fixed", bandwidth=args.bandwidth,
                            scale=args.bandwidth_scale)
    else:
        kernel = KernelSpec(scale=args.bandwidth_scale)
    return RunConfig(
        grid_w=args.grid_w,
        grid_x=args.grid_x,
        kernel=kernel,
        multiplier=MultiplierSpec(args.multiplier, args.bootstrap, args.seed),
        alphas=tuple(args.alpha),
        relevance_tol=args.relevance_tol,
        threads=args.threads,
        branch=getattr(args, "branch", "auto"),
    )


def _emit(text: str, path) -> None:
    if path:
        save(text, path)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_test(args) -> int:
    from .bootstrap.runner import run_test

    covs = ColumnMap.parse_covariates(args.covariates) if args.covariates else ()
    cmap = ColumnMap(args.outcome, args.treatment, args.instrument, covs)
    data = read_csv(args.input, cmap)
    report = run_test(data, _config(args))
    _emit(write_report(report, args.format), args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .dgp import DgpSpec, gen_dgp

    spec = DgpSpec(args.dgp, args.n, args.rho, args.gamma, args.pz, args.seed)
    write_dataset_csv(gen_dgp(spec), args.out)
    return EXIT_OK


def cmd_mc(args) -> int:
    from .dgp import expand_specs, monte_carlo

    specs = expand_specs(args.dgp, args.n, args.rho, args.pz, args.gamma, args.seed)
    config = _config(args)
    table = monte_carlo(specs, args.reps, config, workers=args.threads, decision=args.decision)
    _emit(write_report(table, args.format), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetfx", description="Tests for treatment effect heterogeneity with a binary instrument.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run the test on a CSV file")
    t.add_argument("--input", required=True)
    t.add_argument("--outcome", required=True)
    t.add_argument("--treatment", required=True)
    t.add_argument("--instrument", required=True)
    t.add_argument("--covariates", default="",
                   help="NAME[:discrete|continuous],... (kind defaults to discrete)")
    t.add_argument("--branch", choices=("auto", "discrete", "continuous"), default="auto")
    _add_run_options(t)
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("simulate", help="write a simulated sample to CSV")
    s.add_argument("--dgp", type=int, choices=(1, 2, 3, 4), default=1)
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--rho", type=float, default=0.7)
    s.add_argument("--gamma", type=float, default=0.0)
    s.add_argument("--pz", type=float, default=0.5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("mc", help="Monte Carlo rejection rates")
    m.add_argument("--dgp", type=int, choices=(1, 2, 3, 4), default=1)
    m.add_argument("--n", type=_ints, default=[1000])
    m.add_argument("--rho", type=_floats, default=[0.7])
    m.add_argument("--pz", type=_floats, default=[0.5])
    m.add_argument("--gamma", type=_floats, default=[0.0])
    m.add_argument("--reps", type=int, default=1000)
    m.add_argument("--decision", choices=("pvalue", "critical"), default="pvalue")
    _add_run_options(m)
    m.set_defaults(func=cmd_mc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="hetfx: %(levelname)s: %(message)s")
    try:
        return args.func(args)
    except HetfxError as exc:
        print(f"hetfx: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # pragma: no cover - last resort
        print(f"hetfx: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
