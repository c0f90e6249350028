"""
Command Line
============

``verify`` runs checks on a library example or a chart file and emits the report.

Usage:
    verify gaussian --dim 2 --lambda 0.5 --checks all
    verify bach_product --checks hamilton_tensor
    verify cylinder_shrinker --checks coarea --radii 64 --rmax 12 --out-json report.json
    verify --chart-file my.chart --checks soliton_residual,hamilton_scalar
    verify --list

Exit status: 0 all verdicts as expected, 1 verdict mismatch, 2 parse or configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from typing import Any

from qsoliton import __version__
from qsoliton.config import configure_logging
from qsoliton.errors import NumericalFailure
from qsoliton.manifolds import CATALOG
from qsoliton.models import CHECK_NAMES, RunConfig, RunReport
from qsoliton.tools.runner import report_json, run, write_artifacts

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

# flag dest -> example parameter name
EXAMPLE_FLAGS = {
    "dim": "dim",
    "lam": "lambda",
    "half_width": "half_width",
    "radius": "radius",
    "stationary": "stationary",
    "chart": "chart",
    "rho": "rho",
    "k": "k",
    "a": "a",
    "curvature": "curvature",
    "factor": "factor",
    "factor_dim": "factor_dim",
    "Lambda": "Lambda",
    "linear": "linear",
    "offset": "offset",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="verify", description="Verify gradient q-soliton identities on exact charts"
    )
    parser.add_argument("target", nargs="?", help=f"Example name: {', '.join(CATALOG)}")
    parser.add_argument("--target", dest="target_flag", help="Example name (alternative form)")
    parser.add_argument("--chart-file", help="Declarative chart file instead of an example")
    parser.add_argument("--list", action="store_true", help="List examples and exit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    run_group = parser.add_argument_group("run")
    run_group.add_argument(
        "--checks",
        default="all",
        help=f"Comma-separated checks or 'all'; known: {', '.join(CHECK_NAMES)}",
    )
    run_group.add_argument("--samples", type=int, help="Sample points per check")
    run_group.add_argument("--seed", type=int, help="Low-discrepancy seed")
    run_group.add_argument("--tolerance", type=float, help="Residual tolerance override")
    run_group.add_argument("--radii", type=int, default=64, help="Radius grid size")
    run_group.add_argument("--rmax", type=float, help="Largest radius of the volume grid")
    run_group.add_argument("--delta", type=float, help="Average trace bound for lower volume")
    run_group.add_argument(
        "--no-normalize",
        dest="normalize",
        action="store_false",
        help="Do not shift f to a vanishing Hamilton constant before volume checks",
    )
    run_group.add_argument("--out-json", help="Write the JSON report here")
    run_group.add_argument("--out-csv-dir", help="Write CSV exports into this directory")
    run_group.add_argument("--json", action="store_true", help="Print the JSON report")
    run_group.add_argument("--log-level", help="Logging level (default from QSOLITON_LOG_LEVEL)")

    example = parser.add_argument_group("example parameters")
    example.add_argument("--dim", type=int)
    example.add_argument("--lambda", dest="lam", type=float)
    example.add_argument("--half-width", type=float)
    example.add_argument("--radius", type=float)
    example.add_argument(
        "--height",
        dest="stationary",
        action="store_false",
        default=None,
        help="round_sphere: use f = height (a non-soliton control)",
    )
    example.add_argument("--chart", choices=["polar", "stereographic"])
    example.add_argument("--rho", type=float)
    example.add_argument("--k", type=int)
    example.add_argument("--a", type=float)
    example.add_argument("--curvature", choices=["positive", "negative"])
    example.add_argument("--factor", choices=["point", "sphere", "hyperbolic"])
    example.add_argument("--factor-dim", type=int)
    example.add_argument("--Lambda", type=float)
    example.add_argument("--linear", type=float, nargs="+")
    example.add_argument("--offset", type=float)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    target = args.target or args.target_flag
    params: dict[str, Any] = {
        name: getattr(args, dest)
        for dest, name in EXAMPLE_FLAGS.items()
        if getattr(args, dest) is not None
    }
    if args.chart_file and params:
        raise ValueError("Example parameters cannot be combined with --chart-file")
    checks = [name.strip() for name in args.checks.split(",") if name.strip()]
    return RunConfig(
        target=target,
        chart_file=args.chart_file,
        params=params,
        checks=checks,
        samples=args.samples,
        seed=args.seed,
        tolerance=args.tolerance,
        radii=args.radii,
        rmax=args.rmax,
        delta=args.delta,
        normalize=args.normalize,
        out_json=args.out_json,
        out_csv_dir=args.out_csv_dir,
    )


def summary_table(report: RunReport) -> str:
    rows = [("check", "verdict", "expected", "residual_max", "tolerance")]
    for check in report.checks:
        expected = report.expected.get(check.check)
        residual = "-" if check.residual_max is None else f"{check.residual_max:.3e}"
        rows.append(
            (
                check.check,
                check.verdict.value,
                expected.value if expected is not None else "-",
                residual,
                f"{check.tolerance:.1e}",
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.append(f"status: {report.status}")
    if report.mismatches:
        lines.append(f"mismatches: {', '.join(report.mismatches)}")
    return "\n".join(lines)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    if args.list:
        for name, (_, _, description) in CATALOG.items():
            print(f"{name:20s} {description}")
        return EXIT_OK

    try:
        config = config_from_args(args)
        outcome = run(config)
        write_artifacts(outcome, config)
    except NumericalFailure as e:
        logger.error("Numerical failure: %s", e)
        print(f"error: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as e:
        logger.error("Invalid run: %s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    report = outcome.report
    if args.json:
        print(report_json(report), end="")
    else:
        print(summary_table(report))
    return EXIT_MISMATCH if report.status == "mismatch" else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
