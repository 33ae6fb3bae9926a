"""Command-line front end.

Subcommands: ``run`` executes a campaign described by a JSON config,
``separate`` unmixes a single matrix CSV or a set of PGM images,
``verify-theorem`` runs the exhaustive direction sweep, and ``demo``
runs a small built-in scenario. Exit codes: 0 on success, 1 on usage
errors, 2 on runtime errors. Diagnostics go to stderr; results go to
files or stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .analysis import verify_extraction_theorem
from .bench import (
    config_from_dict,
    run_campaign,
    write_report_csv,
    write_report_json,
)
from .errors import LinfBcaError
from .fileio import load_matrix_csv, load_pgm_with_size, save_matrix_csv, save_pgm
from .linalg import make_rng
from .separation import DEFAULT_MAX_ITER, DEFAULT_MU0, METHODS, separate
from .sources import gen_uniform, inject_extremes

__all__ = ["main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="linfbca", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a campaign from a JSON config")
    p_run.add_argument("config", help="path to the JSON experiment config")

    p_sep = sub.add_parser("separate", help="one-shot separation of a data file")
    p_sep.add_argument(
        "--input",
        nargs="+",
        required=True,
        help="a matrix CSV file, or two or more PGM images",
    )
    p_sep.add_argument("--method", choices=METHODS, required=True)
    p_sep.add_argument(
        "--orthogonal",
        action="store_true",
        help="assume orthogonal mixing and skip whitening",
    )
    p_sep.add_argument("--output", default=None, help="output CSV path or PGM prefix")
    p_sep.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    p_sep.add_argument("--mu0", type=float, default=DEFAULT_MU0)

    p_ver = sub.add_parser("verify-theorem", help="exhaustive direction sweep check")
    p_ver.add_argument("--n", type=int, choices=(2, 3), required=True)
    p_ver.add_argument("--resolution", type=int, required=True)
    p_ver.add_argument("--seed", type=int, default=0)

    p_demo = sub.add_parser("demo", help="run a small built-in scenario")
    p_demo.add_argument("--scenario", choices=("pam4", "copula"), required=True)
    p_demo.add_argument("--seed", type=int, default=20240)
    return parser


def _cmd_run(args) -> int:
    if not os.path.isfile(args.config):
        print(f"config file not found: {args.config}", file=sys.stderr)
        return 1
    try:
        with open(args.config, "r") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        print(f"config is not valid JSON: {exc}", file=sys.stderr)
        return 1
    try:
        config = config_from_dict(raw)
    except LinfBcaError as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return 1

    report = run_campaign(config)
    base = config.output or "report"
    base = os.path.join(os.path.dirname(os.path.abspath(args.config)), base)
    write_report_csv(report, base + ".csv")
    write_report_json(report, base + ".json")
    print(f"wrote {base}.csv and {base}.json", file=sys.stderr)
    for cell in report.aggregates:
        print(
            f"{cell.method} snr={cell.snr_db} rho={cell.rho} "
            f"{cell.metric_name}: mean={cell.mean:.6g} std={cell.std:.6g} n={cell.n}",
            file=sys.stderr,
        )
    return 0


def _cmd_separate(args) -> int:
    paths = args.input
    kinds = {os.path.splitext(p)[1].lower() for p in paths}
    if kinds <= {".csv"}:
        if len(paths) != 1:
            raise _UsageError("pass exactly one CSV file")
        x = load_matrix_csv(paths[0])
        _, outcome = separate(
            x,
            args.method,
            assume_orthogonal_mixing=args.orthogonal,
            max_iter=args.max_iter,
            mu0=args.mu0,
        )
        print(
            f"method={args.method} final_cost={outcome.cost_trace[-1][1]:.9g}",
            file=sys.stderr,
        )
        if args.output:
            save_matrix_csv(outcome.y, args.output)
            print(f"wrote {args.output}", file=sys.stderr)
        else:
            rows, cols = outcome.y.shape
            sys.stdout.write(f"{rows},{cols}\n")
            for row in outcome.y:
                sys.stdout.write(",".join(f"{float(v):.17g}" for v in row) + "\n")
        return 0
    if kinds <= {".pgm"}:
        if len(paths) < 2:
            raise _UsageError("pass two or more PGM images")
        if not args.output:
            raise _UsageError("--output PREFIX is required for PGM inputs")
        rows = []
        size = None
        for p in paths:
            row, dims = load_pgm_with_size(p)
            if size is None:
                size = dims
            elif dims != size:
                raise _UsageError(f"image dimensions differ: {dims} vs {size}")
            rows.append(row)
        x = np.vstack(rows)
        _, outcome = separate(
            x,
            args.method,
            assume_orthogonal_mixing=args.orthogonal,
            max_iter=args.max_iter,
            mu0=args.mu0,
        )
        print(
            f"method={args.method} final_cost={outcome.cost_trace[-1][1]:.9g}",
            file=sys.stderr,
        )
        width, height = size
        for i, est in enumerate(outcome.y, start=1):
            # Estimates carry arbitrary gain; normalize each to full scale.
            peak = np.max(np.abs(est))
            scaled = est / peak if peak > 0 else est
            out_path = f"{args.output}_est{i}.pgm"
            save_pgm(scaled.reshape(height, width), out_path)
            print(f"wrote {out_path}", file=sys.stderr)
        return 0
    raise _UsageError("inputs must be one .csv file or multiple .pgm files")


def _cmd_verify_theorem(args) -> int:
    if args.resolution < 16:
        raise _UsageError("--resolution must be at least 16")
    rng = make_rng(args.seed)
    sources = inject_extremes(gen_uniform(args.n, 256, 1.0, rng))
    report = verify_extraction_theorem(sources, args.resolution)
    status = "PASS" if report.passed else "FAIL"
    print(
        f"{status}: {report.n_vectors} directions swept in dimension "
        f"{report.dimension}, min peak {report.min_value:.12g} "
        f"(bound {report.amplitude:.12g})"
    )
    if report.probe_value is not None:
        print(
            f"mixed-sign probe value {report.probe_value:.12g} "
            f"(expected {5.0 * report.amplitude / 3.0:.12g})"
        )
    if report.worst_offender is not None:
        print(f"worst offender: {report.worst_offender}")
    return 0 if report.passed else 2


def _cmd_demo(args) -> int:
    if args.scenario == "pam4":
        config = config_from_dict(
            {
                "scenario": "pam4",
                "n_sources": 2,
                "n_samples": 400,
                "snr_db_list": [None],
                "methods": ["linf"],
                "n_trials": 3,
                "master_seed": args.seed,
                "max_iter": 12,
            }
        )
        report = run_campaign(config)
        mean_ser = report.aggregates[0].mean
        print(f"pam4 demo (noiseless, 3 trials): mean SER(linf) = {mean_ser} %")
    else:
        config = config_from_dict(
            {
                "scenario": "copula",
                "n_sources": 2,
                "n_samples": 400,
                "snr_db_list": [30],
                "rho_list": [0.5],
                "methods": ["linf"],
                "n_trials": 3,
                "master_seed": args.seed,
                "max_iter": 12,
            }
        )
        report = run_campaign(config)
        mean_isi = report.aggregates[0].mean
        print(f"copula demo (rho=0.5, SNR 30 dB, 3 trials): mean ISI(linf) = {mean_isi:.2f} dB")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "separate":
            return _cmd_separate(args)
        if args.command == "verify-theorem":
            return _cmd_verify_theorem(args)
        return _cmd_demo(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"file not found: {exc}", file=sys.stderr)
        return 1
    except LinfBcaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
