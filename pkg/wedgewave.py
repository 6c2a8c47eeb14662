#!/usr/bin/env python3
"""
wedgewave - command-line entry point.
Runs one experiment family, prints the checks and writes the report,
trace CSVs, convergence plots and the HTML dashboard.

Exit codes: 0 pass, 1 hard check failed, 2 configuration error,
3 numerical failure.
"""

import argparse
import logging
import os
import sys

from config import load_config
from dashboard import generate_html
from errors import ConfigError, NumericalError, WedgewaveError
from harness import FAMILIES, run_experiment
from plot_traces import plot_regulator_trace, plot_trace

EXIT_PASS = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

# Plot at most this many traces per report
MAX_PLOTS = 4


def print_header():
    """Print the run header."""
    header = """
╔══════════════════════════════════════════════════════════════════════════════╗
║                                                                              ║
║        ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~        ║
║                     W  E  D  G  E  W  A  V  E                                ║
║        ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~        ║
║                                                                              ║
║                Wedge-Local Scattering and Deformation Lab                    ║
║                                                                              ║
╚══════════════════════════════════════════════════════════════════════════════╝
"""
    print(header)


def print_section(title):
    """Print a section divider."""
    print(f"\n{'─' * 78}")
    print(f"  {title}")
    print(f"{'─' * 78}")


def parse_args(argv=None):
    parser = argparse.ArgumentParser(prog="wedgewave", description="Run one experiment family.")
    parser.add_argument("family", choices=FAMILIES)
    parser.add_argument("--config", default="config.json", help="JSON configuration file")
    parser.add_argument("--out", default=None, help="output directory (default out/<family>)")
    parser.add_argument("--kappa", type=float, default=None, help="run the deformation at this kappa only")
    parser.add_argument("--schedule-T", type=lambda s: [float(t) for t in s.split(",")], default=None,
                        help="comma-separated T schedule, e.g. 8,16,32,64")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--no-plots", action="store_true", help="skip PNG plots and the dashboard")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    return parser.parse_args(argv)


def print_report(report):
    print_section(f"🧪 {report.family.upper()}  (config {report.config_hash[:12]}, seed {report.seed})")
    for check in report.checks:
        if check.passed:
            marker = "✅"
        else:
            marker = "❌" if check.hard else "⚠️"
        symbol = ">=" if check.comparison == "ge" else "<="
        print(f"  {marker} {check.name:<44} {check.value:.3e} {symbol} {check.bound:.1e}")

    if report.diagnostics:
        print_section("🔍 DIAGNOSTICS (never fail a run)")
        for name, value in report.diagnostics.items():
            if isinstance(value, float):
                print(f"  {name:<46} {value:.3e}")
            else:
                print(f"  {name:<46} {value}")

    print_section("⏱️ TIMINGS")
    for stage, seconds in report.timings.items():
        print(f"  {stage:<46} {seconds:.2f}s")


def write_plots(report, output_dir, tolerance=None):
    for name, trace in list(report.traces.items())[:MAX_PLOTS]:
        plot_trace(trace, os.path.join(output_dir, f"{name}.png"), tolerance)
    for name, rows in list(report.regulator_traces.items())[:MAX_PLOTS]:
        if rows:
            safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in name)
            plot_regulator_trace(rows, os.path.join(output_dir, f"regulator_{safe}.png"), f"Regulator: {name}")


def main(argv=None):
    args = parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)

    print_header()
    try:
        config = load_config(args.config, kappa=args.kappa, schedule_T=args.schedule_T, seed=args.seed)
    except ConfigError as exc:
        print(f"  ❌ Configuration error: {exc}")
        return EXIT_CONFIG

    output_dir = args.out or os.path.join("out", args.family)
    print(f"\n  ⏳ Running {args.family} -> {output_dir}")
    try:
        report = run_experiment(config, args.family, output_dir)
    except ConfigError as exc:
        print(f"  ❌ Configuration error: {exc}")
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"  ❌ Numerical failure in {getattr(exc, 'family', args.family)}: {exc}")
        return EXIT_NUMERICAL
    except WedgewaveError as exc:
        print(f"  ❌ {type(exc).__name__}: {exc}")
        return EXIT_FAILED

    print_report(report)
    if not args.no_plots:
        write_plots(report, output_dir, config.tolerance.ergodic_residual if args.family == "ergodic" else None)
        print(f"\n  Dashboard: {generate_html(os.path.dirname(output_dir) or '.')}")

    print_section("📋 VERDICT")
    if report.passed:
        print(f"  ✅ All {sum(c.hard for c in report.checks)} hard checks pass")
        return EXIT_PASS
    print(f"  ❌ {len(report.failures)} hard checks failed:")
    for check in report.failures:
        print(f"     - {check.name}")
    return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
