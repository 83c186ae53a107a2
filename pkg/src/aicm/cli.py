"""Command-line interface: ``aicm {fit,sdr,test,simulate,sweep}``.

Exit status is 0 on success (whatever the test decision), 2 on bad flags or
unreadable input, and 3 on numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from ._rng import DEFAULT_SEED
from .bootstrap import STATISTICS, BootstrapConfig, BootstrapError, wild_bootstrap_test
from .dataset import Dataset, load_boston, load_csv, standardize, standardize_response
from .errors import DataError, NumericalError
from .estimator import BUILTIN_MODELS, builtin_model, fit_least_squares
from .sdr import estimate_subspace
from .simulation import SCENARIOS, Scenario, format_table, reports_to_csv, run_size_power, sweep

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse already exits 2; keep the message on stderr
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _c_n(text: str) -> float | str:
    return text if text == "auto" else float(text)


def _add_data_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", "-i", help="CSV file with covariates and response")
    src.add_argument("--boston", action="store_true", help="use the bundled Boston housing data")
    p.add_argument("--response", "-r", default="-1",
                   help="response column name or index (default: last column)")
    p.add_argument("--no-header", action="store_true", help="file has no header row")
    p.add_argument("--log-response", action="store_true", help="replace Y by log(Y) before anything else")
    p.add_argument("--standardize", choices=("marginal", "whitened", "none"), default="marginal",
                   help="covariate transform applied before fitting (default: marginal)")
    p.add_argument("--raw-response", action="store_true",
                   help="do not center/scale the response when standardizing")
    p.add_argument("--format", "-f", choices=("json", "table"), default="table")


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", "-s", required=True)
    p.add_argument("--test", "-t", choices=STATISTICS, default="aicm")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=int, default=None, help="covariate dimension (default: dimension rule)")
    p.add_argument("--reps", type=int, default=None, help="data replications (default 500; 1000 with --full-scale)")
    p.add_argument("--B", type=int, default=None, help="bootstrap replicates (default 300; 500 with --full-scale)")
    p.add_argument("--full-scale", action="store_true", help="use 1000 replications and B=500")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--n-jobs", type=int, default=1)
    p.add_argument("--blocks", choices=("joint", "sdr"), default="joint")
    p.add_argument("--local-rate", type=float, default=None)
    p.add_argument("--timing", action="store_true", help="fill the seconds column (breaks byte-reproducibility)")
    p.add_argument("--format", "-f", choices=("csv", "table", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aicm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="least-squares fit of a parametric model")
    _add_data_args(p)
    p.add_argument("--model", "-m", choices=sorted(BUILTIN_MODELS), default="linear")

    p = sub.add_parser("sdr", help="cumulative slicing estimate of the central subspace")
    _add_data_args(p)
    p.add_argument("--c-n", type=_c_n, default="auto")
    p.add_argument("--ridge", type=float, default=1e-8)
    p.add_argument("--directions", type=int, default=2, help="number of leading directions to print")

    p = sub.add_parser("test", help="wild-bootstrap specification test")
    _add_data_args(p)
    p.add_argument("--model", "-m", choices=sorted(BUILTIN_MODELS), default="linear")
    p.add_argument("--statistic", "-t", choices=STATISTICS, default="aicm")
    p.add_argument("--B", type=int, default=500)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--n-jobs", type=int, default=1)
    p.add_argument("--blocks", choices=("joint", "sdr"), default="joint",
                   help="AICM kernel on both projection blocks or on the SDR block only")
    p.add_argument("--c-n", type=_c_n, default="auto")
    p.add_argument("--n-dirs", type=int, default=1000)

    p = sub.add_parser("simulate", help="Monte Carlo size/power for one or more amplitudes")
    _add_sim_args(p)
    p.add_argument("--a", type=float, nargs="+", default=[0.0])

    p = sub.add_parser("sweep", help="Monte Carlo grid over a, n or p")
    _add_sim_args(p)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--param", choices=("a", "n", "p"), required=True)
    p.add_argument("--values", type=float, nargs="+", required=True)
    return parser


# ---------------------------------------------------------------------------


def _load(args) -> Dataset:
    if args.boston:
        d = load_boston()
    else:
        d = load_csv(args.input, response=args.response, header=not args.no_header)
    Y = np.log(d.Y) if args.log_response else d.Y
    X = d.X
    if args.standardize != "none":
        X = standardize(d, args.standardize, ridge=0.0).Z
        if not args.raw_response:
            Y = standardize_response(Y)
    return Dataset(X, Y, d.names, d.source)


def _emit(obj: dict, fmt: str, lines: list[str]) -> None:
    if fmt == "json":
        print(json.dumps(obj, sort_keys=True))
    else:
        print("\n".join(lines))


def cmd_fit(args) -> int:
    d = _load(args)
    fit = fit_least_squares(builtin_model(args.model, d.p), d)
    lines = [f"model       {fit.label}", f"n, p        {d.n}, {d.p}", f"rss         {fit.rss:.6g}",
             f"converged   {fit.converged} ({fit.iterations} iterations)", "theta_hat"]
    names = list(d.names) * (fit.theta_hat.size // d.p + 1)
    for name, v in zip(names, fit.theta_hat):
        lines.append(f"  {name:<10}{v: .6f}")
    _emit(fit.to_dict(), args.format, lines)
    return EXIT_OK


def _direction_lines(names, B, k) -> list[str]:
    lines = []
    for j in range(min(k, B.shape[1])):
        lines.append(f"direction {j + 1}:")
        for name, v in zip(names, B[:, j]):
            lines.append(f"  {name:<10}{v: .4f}")
    return lines


def cmd_sdr(args) -> int:
    d = _load(args)
    if d.n <= d.p:
        raise ValueError(f"n too small for SDR (n={d.n}, p={d.p})")
    res = estimate_subspace(d, args.c_n, ridge=args.ridge, q=None)
    # leading eigenvectors beyond q_hat, for inspection
    full = estimate_subspace(d, args.c_n, ridge=args.ridge, q=min(max(args.directions, res.q_hat), d.p))
    lines = [f"q_hat       {res.q_hat}", f"c_n         {res.c_n:.6g}",
             "eigenvalues " + " ".join(f"{v:.4g}" for v in res.eigenvalues)]
    lines += _direction_lines(d.names, full.B_hat, args.directions)
    out = res.to_dict()
    out["names"] = list(d.names)
    _emit(out, args.format, lines)
    return EXIT_OK


def cmd_test(args) -> int:
    d = _load(args)
    model = builtin_model(args.model, d.p)
    cfg = BootstrapConfig(B=args.B, seed=args.seed, n_jobs=args.n_jobs)
    res = wild_bootstrap_test(d, model, args.statistic, cfg, blocks=args.blocks,
                              c_n=args.c_n, n_dirs=args.n_dirs)
    lines = [f"statistic   {args.statistic} = {res.statistic:.6f}", f"p-value     {res.p_value:.4f}",
             f"B           {res.B} (skipped {res.skipped})"]
    if res.sdr is not None:
        lines.append(f"q_hat       {res.sdr.q_hat}")
        lines += _direction_lines(d.names, res.sdr.B_hat, res.sdr.q_hat)
    out = res.to_dict()
    out.pop("boot_stats")
    if res.sdr is not None:
        out["B_hat"] = res.sdr.B_hat.tolist()
    _emit(out, args.format, lines)
    return EXIT_OK


def _sim_profile(args) -> tuple[int, int]:
    reps = args.reps if args.reps is not None else (1000 if args.full_scale else 500)
    B = args.B if args.B is not None else (500 if args.full_scale else 300)
    return reps, B


def _print_reports(reports, args) -> None:
    if args.format == "json":
        rows = [r.csv_row(args.timing) | {"mean_statistic": r.mean_statistic} for r in reports]
        print(json.dumps(rows, sort_keys=True))
    elif args.format == "table":
        print(format_table(reports))
    else:
        print(format_table(reports), file=sys.stderr)


def _check_scenario(name: str) -> None:
    if name not in SCENARIOS:
        raise argparse.ArgumentTypeError(f"unknown scenario {name!r}; valid ids: {', '.join(SCENARIOS)}")


def cmd_simulate(args) -> int:
    _check_scenario(args.scenario)
    reps, B = _sim_profile(args)
    kw = dict(reps=reps, B=B, alpha=args.alpha, seed=args.seed, n_jobs=args.n_jobs)
    if args.test == "aicm":
        kw["blocks"] = args.blocks
    reports = []
    streamed = args.format == "csv"
    if streamed:
        sys.stdout.write(reports_to_csv([]))
    for a in args.a:
        s = Scenario(args.scenario, a=a, n=args.n, p=args.p, local_rate=args.local_rate)
        r = run_size_power(s, args.test, **kw)
        reports.append(r)
        if streamed:
            sys.stdout.write(reports_to_csv([r], header=False, timing=args.timing))
            sys.stdout.flush()
    _print_reports(reports, args)
    return EXIT_OK


def cmd_sweep(args) -> int:
    _check_scenario(args.scenario)
    reps, B = _sim_profile(args)
    kw = dict(reps=reps, B=B, alpha=args.alpha, seed=args.seed, n_jobs=args.n_jobs)
    if args.test == "aicm":
        kw["blocks"] = args.blocks
    base = Scenario(args.scenario, a=args.a, n=args.n, p=args.p, local_rate=args.local_rate)
    reports = sweep(base, args.param, args.values, args.test, **kw)
    if args.format == "csv":
        sys.stdout.write(reports_to_csv(reports, timing=args.timing))
    _print_reports(reports, args)
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "sdr": cmd_sdr, "test": cmd_test, "simulate": cmd_simulate, "sweep": cmd_sweep}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except argparse.ArgumentTypeError as exc:
        print(f"aicm: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FileNotFoundError, IsADirectoryError, PermissionError, DataError) as exc:
        print(f"aicm: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, BootstrapError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"aicm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
