#!/usr/bin/env python3
"""Pure-state discrimination with Belavkin weighted square-root measurements.

Usage:
  python scripts/belavkin_cli.py discriminate --input data/ensembles/counterexample.json --method all
  python scripts/belavkin_cli.py counterexample
  python scripts/belavkin_cli.py figure-data fig2a --resolution 201 --out fig2a.csv
  python scripts/belavkin_cli.py figure-data fig2b --summary
  python scripts/belavkin_cli.py asymptotic-sweep --weights 4,1 --p1 0.5
  python scripts/belavkin_cli.py random-experiment --dim 3 --m 4 --trials 200 --seed 7
  python scripts/belavkin_cli.py verify --input data/ensembles/orthonormal3.json --weights 1,1,1

Exit codes: 0 success, 1 invalid input, 2 no certified optimum.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd
from pydantic import ValidationError

sys.path.append(str(Path(__file__).resolve().parents[1]))
from belavkin.components.harness import (  # noqa: E402
    FIGURES,
    RunConfig,
    cmd_asymptotic_sweep,
    cmd_counterexample,
    cmd_discriminate,
    cmd_figure_data,
    cmd_random_experiment,
    cmd_supremum,
    cmd_verify,
    pgm_sweep_constants,
)
from belavkin.components.ensemble import counterexample_ensemble  # noqa: E402
from belavkin.components.errors import BelavkinError  # noqa: E402
from belavkin.components.reports import (  # noqa: E402
    DiscriminationReport,
    archive_report,
    frame_to_csv,
    report_to_json,
    to_json,
)
from belavkin.components.settings import configure_logging  # noqa: E402

logger = logging.getLogger("belavkin.cli")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_UNCERTIFIED = 2


def parse_floats(raw: Optional[str]) -> Optional[List[float]]:
    if raw is None:
        return None
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise ValueError(f"expected comma-separated numbers, got {raw!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Minimum-error discrimination of pure-state ensembles.")
    parser.add_argument("--log-level", default=None, help="Overrides BELAVKIN_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--format", choices=("json", "csv"), default="json", help="Output format")
        p.add_argument("--out", default=None, help="Write output here instead of stdout")
        p.add_argument("--seed", type=int, default=None, help="Random seed")

    p = sub.add_parser("discriminate", help="Failure rates, certificates and bounds for an ensemble file")
    p.add_argument("--input", required=True, help="Ensemble JSON file")
    p.add_argument("--method", default="all", help="opt, pgm, holevo, cubic, custom, r=<power> or all (comma-separated)")
    p.add_argument("--weights", default=None, help="Custom weights w1,w2,...")
    p.add_argument("--archive", action="store_true", help="Also store the report under data/reports/")
    common(p)

    p = sub.add_parser("counterexample", help="Ensemble whose likeliest state is never detected optimally")
    p.add_argument("--archive", action="store_true", help="Also store the report under data/reports/")
    common(p)

    p = sub.add_parser("figure-data", help="Failure-ratio grids for binary ensembles")
    p.add_argument("figure", choices=sorted(FIGURES), help="fig1 = PGM and Holevo, fig2a = Holevo, fig2b = cubic")
    p.add_argument("--resolution", type=int, default=101, help="Samples per axis")
    p.add_argument("--summary", action="store_true", help="Report grid maxima and refined suprema as JSON")
    common(p)

    p = sub.add_parser("asymptotic-sweep", help="Ratios for W_k = c_k p_k^2 as the states become orthogonal")
    p.add_argument("--weights", default=None, help="c1,c2 (default 1,1)")
    p.add_argument("--method", default=None, help="pgm uses c_k = 1/p_k")
    p.add_argument("--p1", type=float, default=0.5, help="Prior of the first state")
    common(p)

    p = sub.add_parser("random-experiment", help="Compare BWSRMs on random ensembles")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--priors", default=None, help="p1,p2,... (default uniform)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--around-counterexample", action="store_true", help="Perturb the counterexample instead of sampling Haar states")
    p.add_argument("--scale", type=float, default=1e-4, help="Perturbation size with --around-counterexample")
    common(p)

    p = sub.add_parser("verify", help="Certificate suite for an ensemble and weights")
    p.add_argument("--input", required=True, help="Ensemble JSON file")
    p.add_argument("--weights", default=None, help="w1,w2,...")
    p.add_argument("--method", default="holevo", help="Power weighting used when --weights is absent")
    common(p)
    return parser


def emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def emit_report(report: DiscriminationReport, args: argparse.Namespace) -> int:
    emit(report_to_json(report), args.out)
    if getattr(args, "archive", False):
        archive_report(report)
    return EXIT_UNCERTIFIED if report.status == "uncertified" else EXIT_OK


def run(args: argparse.Namespace) -> int:
    if args.command in ("discriminate", "verify"):
        config = RunConfig(
            command=args.command,
            input=Path(args.input),
            method=args.method,
            weights=parse_floats(args.weights),
            format=args.format,
            seed=args.seed,
            out=Path(args.out) if args.out else None,
        )
        report = cmd_discriminate(config) if args.command == "discriminate" else cmd_verify(config)
        return emit_report(report, args)

    if args.command == "counterexample":
        return emit_report(cmd_counterexample(seed=args.seed), args)

    if args.command == "figure-data":
        if args.summary:
            return emit_report(cmd_supremum(FIGURES[args.figure]), args)
        frame = cmd_figure_data(args.figure, args.resolution)
        emit(frame_to_csv(frame) if args.format == "csv" else to_json(frame.to_dict(orient="list")), args.out)
        return EXIT_OK

    if args.command == "asymptotic-sweep":
        if args.method and args.method.strip().lower() == "pgm":
            c = pgm_sweep_constants(args.p1)
        else:
            c = parse_floats(args.weights) or [1.0, 1.0]
        frame = cmd_asymptotic_sweep(c, args.p1)
        emit(frame_to_csv(frame) if args.format == "csv" else to_json(frame.to_dict(orient="list")), args.out)
        return EXIT_OK

    if args.command == "random-experiment":
        seed = 0 if args.seed is None else args.seed
        center = counterexample_ensemble() if args.around_counterexample else None
        report = cmd_random_experiment(args.dim, args.m, parse_floats(args.priors), args.trials, seed, center=center, scale=args.scale)
        if args.format == "csv":
            frame = pd.DataFrame(report.extras["trials"], columns=["trial", "pgm", "holevo", "cubic", "opt", "converged"])
            emit(frame_to_csv(frame), args.out)
            return EXIT_OK
        return emit_report(report, args)

    raise ValueError(f"unknown command {args.command!r}")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return run(args)
    except (ValidationError, ValueError, OSError) as exc:
        logger.debug("invalid input", exc_info=True)
        print(json.dumps({"status": "error", "error": str(exc)}, indent=2))
        return EXIT_INVALID
    except BelavkinError as exc:
        print(json.dumps({"status": "uncertified", "error": str(exc)}, indent=2))
        return EXIT_UNCERTIFIED


if __name__ == "__main__":
    sys.exit(main())
